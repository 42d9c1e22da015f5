//! One DLN step, computed two ways.
//!
//! The production path runs the refactorized pipeline
//!
//! 1. pre-process: `y_old = a1 y_n + a0 y_{n-1}`, `t_new = sum beta_l t_l`,
//!    `dt = b * khat`;
//! 2. backward Euler: solve `(y_new - y_old) / dt = f(t_new, y_new)`;
//! 3. post-process: `y_{n+1} = c2 y_new + c1 y_n + c0 y_{n-1}`.
//!
//! The reference path solves the one-leg formula
//! `(alpha2 y_{n+1} + alpha1 y_n + alpha0 y_{n-1}) / khat = f(t_beta, y_beta)`
//! for `y_{n+1}` directly. Both share the same Newton core and agree to the
//! Newton tolerance.

use alloc::vec::Vec;

use crate::coefficients::{CoefficientSet, DlnParameters, StepWindow};
use crate::error::{domain, Error};
use crate::newton::{solve_backward_euler, solve_residual, NewtonConfig, SolveOutcome};
use crate::problem::{jacobian_or_fd, OdeSystem};

/// Number of nodes older than `t_prev` kept for derivative estimation.
pub const TAIL_LEN: usize = 2;

/// Rolling two-step history plus a short tail of older nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub t_prev: f64,
    pub y_prev: Vec<f64>,
    pub t_curr: f64,
    pub y_curr: Vec<f64>,
    /// Older `(t, y)` nodes, oldest first, all before `t_prev`.
    pub tail: Vec<(f64, Vec<f64>)>,
}

impl StepState {
    pub fn new(
        t_prev: f64,
        y_prev: Vec<f64>,
        t_curr: f64,
        y_curr: Vec<f64>,
    ) -> Result<Self, Error> {
        if !(t_prev < t_curr) {
            return Err(domain("history times must increase"));
        }
        if y_prev.len() != y_curr.len() {
            return Err(Error::DimensionMismatch {
                expected: y_curr.len(),
                found: y_prev.len(),
            });
        }
        Ok(Self {
            t_prev,
            y_prev,
            t_curr,
            y_curr,
            tail: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.y_curr.len()
    }

    /// The last step taken, `t_curr - t_prev`.
    pub fn k_prev(&self) -> f64 {
        self.t_curr - self.t_prev
    }

    /// Shifts the history forward by one accepted step.
    pub fn advance(&mut self, t_next: f64, y_next: Vec<f64>) {
        let y_prev = core::mem::replace(
            &mut self.y_prev,
            core::mem::replace(&mut self.y_curr, y_next),
        );
        self.tail.push((self.t_prev, y_prev));
        if self.tail.len() > TAIL_LEN {
            self.tail.remove(0);
        }
        self.t_prev = self.t_curr;
        self.t_curr = t_next;
    }

    /// All retained nodes, oldest first.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.tail.iter().map(|(t, y)| (*t, y.as_slice())).chain([
            (self.t_prev, self.y_prev.as_slice()),
            (self.t_curr, self.y_curr.as_slice()),
        ])
    }
}

/// Everything computed while taking one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t_next: f64,
    pub y_next: Vec<f64>,
    pub t_new: f64,
    pub y_old_blend: Vec<f64>,
    pub y_new: Vec<f64>,
    pub dt_be: f64,
    pub newton: SolveOutcome,
    pub window: StepWindow,
    pub coefficients: CoefficientSet,
}

impl StepReport {
    pub fn converged(&self) -> bool {
        self.newton.converged
    }
}

/// Output of the pre-process filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PreProcessed {
    pub t_new: f64,
    pub y_old: Vec<f64>,
    pub dt_be: f64,
}

pub fn pre_process(state: &StepState, coeffs: &CoefficientSet, win: &StepWindow) -> PreProcessed {
    let t_next = state.t_curr + win.k_n;
    PreProcessed {
        t_new: coeffs.beta_blend(t_next, state.t_curr, state.t_prev),
        y_old: state
            .y_curr
            .iter()
            .zip(&state.y_prev)
            .map(|(yc, yp)| coeffs.a1 * yc + coeffs.a0 * yp)
            .collect(),
        dt_be: coeffs.b * win.khat,
    }
}

pub fn post_process(y_new: &[f64], state: &StepState, coeffs: &CoefficientSet) -> Vec<f64> {
    y_new
        .iter()
        .zip(&state.y_curr)
        .zip(&state.y_prev)
        .map(|((yn, yc), yp)| coeffs.c2 * yn + coeffs.c1 * yc + coeffs.c0 * yp)
        .collect()
}

fn check_step(system: &dyn OdeSystem, state: &StepState, k_n: f64) -> Result<(), Error> {
    if state.dim() != system.dim() || state.y_prev.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: state.dim(),
        });
    }
    if !(k_n > 0.0) {
        return Err(domain("step size must be positive"));
    }
    Ok(())
}

/// One step through pre-process, backward Euler and post-process.
///
/// A Newton solve that fails to converge is reported through
/// `report.newton.converged`; the caller decides whether to reject.
pub fn dln_step_refactorized(
    system: &dyn OdeSystem,
    state: &StepState,
    params: &DlnParameters,
    k_n: f64,
    cfg: &NewtonConfig,
) -> Result<StepReport, Error> {
    check_step(system, state, k_n)?;
    let window = params.window(k_n, state.k_prev())?;
    let coefficients = CoefficientSet::new(params, &window);
    let pre = pre_process(state, &coefficients, &window);
    let newton =
        solve_backward_euler(system, pre.t_new, &pre.y_old, pre.dt_be, &state.y_curr, cfg)?;
    let y_next = post_process(&newton.y, state, &coefficients);
    Ok(StepReport {
        t_next: state.t_curr + k_n,
        y_next,
        t_new: pre.t_new,
        y_old_blend: pre.y_old,
        y_new: newton.y.clone(),
        dt_be: pre.dt_be,
        newton,
        window,
        coefficients,
    })
}

/// One step by solving the one-leg formula for `y_{n+1}` directly.
/// Reference path.
///
/// The one-leg residual `(sum alpha_l y_l) / khat - f(t_beta, sum beta_l y_l)`
/// is solved multiplied through by `khat / alpha2`, so the Newton tolerance
/// applies in units of `y` as in the backward Euler stage. Unscaled, its
/// roundoff floor `~ eps |y| / khat` exceeds the tolerance on short steps.
/// The Newton matrix is `I - (khat beta2 / alpha2) J`.
pub fn dln_step_oneleg(
    system: &dyn OdeSystem,
    state: &StepState,
    params: &DlnParameters,
    k_n: f64,
    cfg: &NewtonConfig,
) -> Result<StepReport, Error> {
    check_step(system, state, k_n)?;
    let window = params.window(k_n, state.k_prev())?;
    let c = CoefficientSet::new(params, &window);
    let pre = pre_process(state, &c, &window);
    let t_beta = pre.t_new;
    let n = system.dim();
    // khat / alpha2, the scaling of the residual.
    let h = window.khat / params.alpha2;
    let (yc, yp) = (&state.y_curr, &state.y_prev);

    let blend = |y: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| c.beta2 * y[i] + c.beta1 * yc[i] + c.beta0 * yp[i])
            .collect()
    };
    let mut f = alloc::vec![0.0; n];
    let newton = solve_residual(
        |y, r| {
            let yb = blend(y);
            system.rhs(t_beta, &yb, &mut f);
            for i in 0..n {
                r[i] = y[i] + (params.alpha1 * yc[i] + params.alpha0 * yp[i]) / params.alpha2
                    - h * f[i];
            }
        },
        |y| {
            let mut m = jacobian_or_fd(system, t_beta, &blend(y));
            m.shift_scale(1.0, -h * c.beta2);
            m
        },
        yc,
        cfg,
    )?;
    let y_new = blend(&newton.y);
    Ok(StepReport {
        t_next: state.t_curr + k_n,
        y_next: newton.y.clone(),
        t_new: t_beta,
        y_old_blend: pre.y_old,
        y_new,
        dt_be: pre.dt_be,
        newton,
        window,
        coefficients: c,
    })
}

/// Produces `(t0, y0), (t0 + k0, y1)` with one implicit midpoint step, the
/// `delta = 1` member of the family. That member ignores `y_{n-1}`, so a
/// phantom node at `t0 - k0` stands in for the missing history.
pub fn bootstrap_first_step(
    system: &dyn OdeSystem,
    t0: f64,
    y0: &[f64],
    k0: f64,
    cfg: &NewtonConfig,
) -> Result<(StepState, StepReport), Error> {
    if !(k0 > 0.0) {
        return Err(domain("initial step must be positive"));
    }
    let phantom = StepState::new(t0 - k0, y0.to_vec(), t0, y0.to_vec())?;
    let report = dln_step_refactorized(system, &phantom, &DlnParameters::midpoint(), k0, cfg)?;
    if !report.converged() {
        return Err(Error::Bootstrap {
            iterations: report.newton.iterations,
            residual: report.newton.final_residual,
        });
    }
    let state = StepState::new(t0, y0.to_vec(), report.t_next, report.y_next.clone())?;
    Ok((state, report))
}
