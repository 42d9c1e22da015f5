//! Scalar coefficients of the DLN family.
//!
//! Everything here is a pure function of the method parameter `delta` and the
//! two most recent step sizes. Coefficients are rebuilt on every step; nothing
//! is cached across steps.
//!
//! Index convention: a trailing `2` multiplies `y_{n+1}`, `1` multiplies `y_n`
//! and `0` multiplies `y_{n-1}`.

use crate::error::{domain, Error};
use crate::math::sqrt;

/// Default method parameter. Any value strictly inside `(0, 1)` adds
/// numerical dissipation; `2/3` keeps both lower interpolation weights
/// nonzero.
pub const DEFAULT_DELTA: f64 = 2.0 / 3.0;

/// The method parameter and the step-independent one-leg weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlnParameters {
    pub delta: f64,
    pub alpha2: f64,
    pub alpha1: f64,
    pub alpha0: f64,
}

impl DlnParameters {
    /// Builds the parameter set. `delta` must lie in `[0, 1]`.
    pub fn new(delta: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(domain(alloc::format!("delta = {delta} is outside [0, 1]")));
        }
        Ok(Self {
            delta,
            alpha2: 0.5 * (1.0 + delta),
            alpha1: -delta,
            alpha0: 0.5 * (delta - 1.0),
        })
    }

    /// Parameter set of the one-step implicit midpoint rule.
    pub fn midpoint() -> Self {
        Self::new(1.0).expect("1 is in range")
    }

    /// Step window for the step `k_n` taken after a step of length `k_prev`.
    pub fn window(&self, k_n: f64, k_prev: f64) -> Result<StepWindow, Error> {
        StepWindow::new(self, k_n, k_prev)
    }

    /// Weights of the G-norm on the two-step state `(y_n, y_{n-1})`.
    pub fn g_weights(&self) -> (f64, f64) {
        g_weights(self)
    }
}

/// The current and previous step sizes with their derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWindow {
    pub k_n: f64,
    pub k_prev: f64,
    /// Step variability `(k_n - k_prev) / (k_n + k_prev)`, always in `(-1, 1)`.
    pub eps: f64,
    /// Average step `alpha2 * k_n - alpha0 * k_prev`.
    pub khat: f64,
}

impl StepWindow {
    pub fn new(params: &DlnParameters, k_n: f64, k_prev: f64) -> Result<Self, Error> {
        // Written so that NaN is rejected too.
        if !(k_n > 0.0 && k_prev > 0.0) || !k_n.is_finite() || !k_prev.is_finite() {
            return Err(domain(alloc::format!(
                "step sizes must be positive and finite (k_n = {k_n}, k_prev = {k_prev})"
            )));
        }
        Ok(Self {
            k_n,
            k_prev,
            eps: (k_n - k_prev) / (k_n + k_prev),
            khat: params.alpha2 * k_n - params.alpha0 * k_prev,
        })
    }
}

/// All step-dependent coefficients for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub beta2: f64,
    pub beta1: f64,
    pub beta0: f64,
    /// Pre-process weights: `y_old = a1 * y_n + a0 * y_{n-1}`.
    pub a1: f64,
    pub a0: f64,
    /// Backward Euler step is `b * khat`.
    pub b: f64,
    /// Post-process weights: `y_{n+1} = c2 * y_new + c1 * y_n + c0 * y_{n-1}`.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub gamma2: f64,
    pub gamma1: f64,
    pub gamma0: f64,
}

impl CoefficientSet {
    pub fn new(params: &DlnParameters, win: &StepWindow) -> Self {
        let d = params.delta;
        let eps = win.eps;
        let one_minus_d2 = 1.0 - d * d;
        let denom = (1.0 + eps * d) * (1.0 + eps * d);

        let beta2 = 0.25 * (1.0 + one_minus_d2 / denom + eps * eps * d * one_minus_d2 / denom + d);
        let beta1 = 0.5 * (1.0 - one_minus_d2 / denom);
        let beta0 = 1.0 - beta2 - beta1;

        let a1 = beta1 - params.alpha1 * beta2 / params.alpha2;
        let a0 = 1.0 - a1;
        let b = beta2 / params.alpha2;
        let c2 = 1.0 / beta2;
        let c1 = -beta1 / beta2;
        let c0 = -beta0 / beta2;

        // d (1 - d^2) is exactly zero at both ends of [0, 1].
        let gamma1 = -sqrt(d * one_minus_d2) / (core::f64::consts::SQRT_2 * (1.0 + eps * d));
        let gamma2 = -0.5 * (1.0 - eps) * gamma1;
        let gamma0 = -0.5 * (1.0 + eps) * gamma1;

        Self {
            beta2,
            beta1,
            beta0,
            a1,
            a0,
            b,
            c2,
            c1,
            c0,
            gamma2,
            gamma1,
            gamma0,
        }
    }

    /// `beta2 * x2 + beta1 * x1 + beta0 * x0`.
    #[inline]
    pub fn beta_blend(&self, x2: f64, x1: f64, x0: f64) -> f64 {
        self.beta2 * x2 + self.beta1 * x1 + self.beta0 * x0
    }
}

/// Coefficients for one step; alias of [`CoefficientSet::new`].
pub fn make_coefficients(params: &DlnParameters, win: &StepWindow) -> CoefficientSet {
    CoefficientSet::new(params, win)
}

/// Diagonal blocks of `G(delta)`: `((1 + delta)/4, (1 - delta)/4)`.
pub fn g_weights(params: &DlnParameters) -> (f64, f64) {
    (0.25 * (1.0 + params.delta), 0.25 * (1.0 - params.delta))
}
