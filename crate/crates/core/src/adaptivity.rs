//! Local error estimation and step-size control.
//!
//! The local truncation error is taken to be the differentiation defect
//!
//! ```text
//! L_d ~ (y'''(t_n) / 2) * [ (k_n^3 - (alpha0/alpha2) k_{n-1}^3) / (3 khat)
//!                           - (beta2 k_n - beta0 k_{n-1})^2 / alpha2 ]
//! ```
//!
//! It is turned into a per-step error by multiplying with `khat`, which gives
//! `k^3 y''' / 24` for the midpoint member and `(k_n + k_{n-1})^3 y''' / 24`
//! for the double-step midpoint member. `y'''` is estimated from a third
//! divided difference over the four most recent nodes, the newest being the
//! step's own result, so the estimate costs no extra function evaluations.

use alloc::vec::Vec;

use crate::coefficients::{CoefficientSet, DlnParameters, StepWindow};
use crate::driver::{StepRecord, StepperKind, Trajectory};
use crate::error::{domain, Error};
use crate::math::{abs, cbrt, sqrt};
use crate::newton::NewtonConfig;
use crate::problem::ProblemInstance;
use crate::stepper::{bootstrap_first_step, StepReport, StepState};

/// Absolute and relative tolerances of the error weights
/// `1 / (abs + rel * |y_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: 1e-6,
            rel: 1e-6,
        }
    }
}

/// Leading-order local error of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LteEstimate {
    /// Divided defect, in units of `y'`.
    pub defect: Vec<f64>,
    /// `khat * defect`, in units of `y`.
    pub per_step_error: Vec<f64>,
    /// Weighted RMS norm of `per_step_error`; at most 1 means within tolerance.
    pub scalar_error: f64,
}

impl LteEstimate {
    pub fn new(defect: Vec<f64>, khat: f64, y: &[f64], tol: Tolerances) -> Self {
        let per_step_error: Vec<f64> = defect.iter().map(|d| khat * d).collect();
        let scalar_error = weighted_rms_norm(&per_step_error, y, tol);
        Self {
            defect,
            per_step_error,
            scalar_error,
        }
    }
}

/// `sqrt(mean((e_i / (abs + rel |y_i|))^2))`.
pub fn weighted_rms_norm(e: &[f64], y: &[f64], tol: Tolerances) -> f64 {
    if e.is_empty() {
        return 0.0;
    }
    let sum: f64 = e
        .iter()
        .zip(y)
        .map(|(ei, yi)| {
            let w = ei / (tol.abs + tol.rel * abs(*yi));
            w * w
        })
        .sum();
    sqrt(sum / e.len() as f64)
}

/// The bracketed step-size factor of the differentiation defect.
pub fn lte_bracket(params: &DlnParameters, coeffs: &CoefficientSet, win: &StepWindow) -> f64 {
    let (k, kp) = (win.k_n, win.k_prev);
    let spread = coeffs.beta2 * k - coeffs.beta0 * kp;
    (k * k * k - params.alpha0 / params.alpha2 * kp * kp * kp) / (3.0 * win.khat)
        - spread * spread / params.alpha2
}

/// `6 * y[t0, t1, t2, t3]`, the third divided difference scaled to estimate
/// `y'''`. Times must be strictly increasing.
pub fn estimate_third_derivative(nodes: [(f64, &[f64]); 4]) -> Result<Vec<f64>, Error> {
    for w in nodes.windows(2) {
        if !(w[0].0 < w[1].0) {
            return Err(domain(
                "divided-difference nodes must have strictly increasing times",
            ));
        }
    }
    let t = nodes.map(|(t, _)| t);
    let dim = nodes[0].1.len();
    if nodes.iter().any(|(_, y)| y.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: nodes
                .iter()
                .map(|(_, y)| y.len())
                .find(|&l| l != dim)
                .unwrap_or(dim),
        });
    }
    let out = (0..dim)
        .map(|i| {
            let y = nodes.map(|(_, y)| y[i]);
            let d1 = [
                (y[1] - y[0]) / (t[1] - t[0]),
                (y[2] - y[1]) / (t[2] - t[1]),
                (y[3] - y[2]) / (t[3] - t[2]),
            ];
            let d2 = [
                (d1[1] - d1[0]) / (t[2] - t[0]),
                (d1[2] - d1[1]) / (t[3] - t[1]),
            ];
            6.0 * (d2[1] - d2[0]) / (t[3] - t[0])
        })
        .collect();
    Ok(out)
}

/// Error estimate for the step in `report`, taken from `state`. `None` until
/// the history holds the three nodes needed alongside the new one.
pub fn estimate_step_error(
    params: &DlnParameters,
    state: &StepState,
    report: &StepReport,
    tol: Tolerances,
) -> Option<Result<LteEstimate, Error>> {
    let nodes: Vec<(f64, &[f64])> = state.nodes().collect();
    if nodes.len() < 3 {
        return None;
    }
    let last3 = &nodes[nodes.len() - 3..];
    let four = [
        last3[0],
        last3[1],
        last3[2],
        (report.t_next, report.y_next.as_slice()),
    ];
    Some(estimate_third_derivative(four).map(|y3| {
        let bracket = lte_bracket(params, &report.coefficients, &report.window);
        let defect = y3.iter().map(|d| 0.5 * d * bracket).collect();
        LteEstimate::new(defect, report.window.khat, &report.y_next, tol)
    }))
}

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub safety: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Step used for the start-up midpoint step and the warm-up step.
    pub k_initial: f64,
    /// Consecutive rejections allowed at one time level.
    pub max_rejections: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            tol_abs: 1e-6,
            tol_rel: 1e-6,
            safety: 0.9,
            ratio_min: 0.5,
            ratio_max: 2.0,
            k_min: 1e-12,
            k_max: f64::INFINITY,
            k_initial: 1e-3,
            max_rejections: 10,
        }
    }
}

impl ControllerConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            abs: self.tol_abs,
            rel: self.tol_rel,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let ok = self.tol_abs > 0.0
            && self.tol_rel >= 0.0
            && self.safety > 0.0
            && self.safety < 1.0
            && self.ratio_min > 0.0
            && self.ratio_min <= 1.0
            && self.ratio_max >= 1.0
            && self.ratio_max.is_finite()
            && self.k_min > 0.0
            && self.k_max >= self.k_min
            && self.k_initial >= self.k_min
            && self.k_initial <= self.k_max;
        if ok {
            Ok(())
        } else {
            Err(domain("invalid controller configuration"))
        }
    }
}

/// Accepts iff `scalar_error <= 1`; the next step is
/// `k_n * clamp(safety * err^(-1/3), ratio_min, ratio_max)` clamped to
/// `[k_min, k_max]`.
pub fn propose_next_step(est: &LteEstimate, cfg: &ControllerConfig, k_n: f64) -> (bool, f64) {
    let err = est.scalar_error;
    let accept = err <= 1.0;
    let factor = if err > 0.0 {
        cfg.safety / cbrt(err)
    } else {
        f64::INFINITY
    };
    let factor = if factor.is_nan() {
        cfg.ratio_min
    } else {
        factor
    };
    let k_next = (k_n * factor.clamp(cfg.ratio_min, cfg.ratio_max)).clamp(cfg.k_min, cfg.k_max);
    (accept, k_next)
}

/// Output of [`integrate_adaptive`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaptiveRun {
    /// Accepted nodes and their step records.
    pub trajectory: Trajectory,
    /// Every attempted step after start-up, rejected ones included, in order.
    pub attempts: Vec<StepRecord>,
    pub rejected: usize,
}

/// Adaptive integration over `[instance.t0, instance.t_end]`.
///
/// The first two steps use `k_initial` without error control. The final step
/// is shortened to land on `t_end`; when it would be shorter than
/// `ratio_min` times its predecessor, the remaining interval is split in two
/// equal steps instead.
///
/// Consecutive accepted steps keep their ratio within
/// `[ratio_min, ratio_max]` unless a rejection intervenes: retries shrink the
/// step further so the run can get past sharp transients.
pub fn integrate_adaptive(
    instance: &ProblemInstance,
    params: DlnParameters,
    ctrl: &ControllerConfig,
    newton: &NewtonConfig,
) -> Result<AdaptiveRun, Error> {
    ctrl.validate()?;
    let system = instance.system.as_ref();
    let tol = ctrl.tolerances();
    let t_end = instance.t_end;
    let span = t_end - instance.t0;
    let mut run = AdaptiveRun::default();
    run.trajectory.push(instance.t0, instance.y0.clone());

    let k0 = ctrl.k_initial.min(span);
    let (mut state, boot) = bootstrap_first_step(system, instance.t0, &instance.y0, k0, newton)?;
    let phantom = StepState::new(
        instance.t0 - k0,
        instance.y0.clone(),
        instance.t0,
        instance.y0.clone(),
    )?;
    let boot_rec =
        StepRecord::from_report(1, &DlnParameters::midpoint(), &phantom, &boot, None, true);
    run.attempts.push(boot_rec.clone());
    run.trajectory.records.push(boot_rec);
    run.trajectory.push(state.t_curr, state.y_curr.clone());

    let mut k = k0;
    let mut n = 1;
    while t_end - state.t_curr > span * 1e-14 {
        let mut attempts = 0;
        loop {
            let rem = t_end - state.t_curr;
            let landing = k >= rem * (1.0 - 1e-12);
            let k_try = if landing {
                rem
            } else if rem - k < ctrl.ratio_min * k {
                0.5 * rem
            } else {
                k
            };
            if k_try < ctrl.k_min && !landing {
                return Err(Error::StepSizeUnderflow {
                    t: state.t_curr,
                    k: k_try,
                    k_min: ctrl.k_min,
                });
            }

            let report = StepperKind::Refactorized.step(system, &state, &params, k_try, newton)?;
            if !report.converged() {
                run.attempts.push(StepRecord::from_report(
                    n + 1,
                    &params,
                    &state,
                    &report,
                    None,
                    false,
                ));
                run.rejected += 1;
                attempts += 1;
                if attempts > ctrl.max_rejections {
                    return Err(Error::TooManyRejections {
                        t: state.t_curr,
                        attempts,
                    });
                }
                k = 0.5 * k_try;
                continue;
            }

            let lte = estimate_step_error(&params, &state, &report, tol).transpose()?;
            let (accept, k_next) = match &lte {
                Some(est) => propose_next_step(est, ctrl, k_try),
                // Warm-up: no history yet, accept and keep the step.
                None => (true, k_try),
            };
            let t_next = if landing { t_end } else { report.t_next };
            let record = StepRecord::from_report(n + 1, &params, &state, &report, lte, accept);
            run.attempts.push(record.clone());
            if accept {
                run.trajectory.records.push(StepRecord {
                    t: t_next,
                    ..record
                });
                run.trajectory.push(t_next, report.y_next.clone());
                state.advance(t_next, report.y_next);
                n += 1;
                // The landing step says nothing about the preferred step size.
                if !landing {
                    k = k_next;
                }
                break;
            }
            run.rejected += 1;
            attempts += 1;
            if attempts > ctrl.max_rejections {
                return Err(Error::TooManyRejections {
                    t: state.t_curr,
                    attempts,
                });
            }
            if k_next < ctrl.k_min * (1.0 + 1e-12) && k_try <= ctrl.k_min * (1.0 + 1e-12) {
                return Err(Error::StepSizeUnderflow {
                    t: state.t_curr,
                    k: k_next,
                    k_min: ctrl.k_min,
                });
            }
            k = k_next;
        }
    }
    Ok(run)
}
