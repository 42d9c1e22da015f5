//! Newton iteration for the implicit stage.
//!
//! Convergence is judged on the max-norm of the residual, so a converged
//! solve bounds the defect that enters the step directly.

use alloc::vec::Vec;

use crate::error::{domain, Error};
use crate::linalg::Matrix;
use crate::math::max_norm;
use crate::problem::{jacobian_or_fd, OdeSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the residual max-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Halve the update (up to 8 times) while the residual does not decrease.
    pub damping: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 25,
            damping: true,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tol > 0.0) {
            return Err(domain("Newton tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(domain("Newton max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub y: Vec<f64>,
    /// Number of Newton updates applied.
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

const MAX_HALVINGS: usize = 8;

/// Solves `residual(y) = 0` from `guess`.
///
/// `residual` writes `r(y)` into its second argument; `jacobian` returns
/// `dr/dy`. At least one update is applied unless the guess has a zero
/// residual. Non-convergence is reported through `converged = false`; only a
/// singular Newton matrix is an error.
pub fn solve_residual<R, J>(
    mut residual: R,
    mut jacobian: J,
    guess: &[f64],
    cfg: &NewtonConfig,
) -> Result<SolveOutcome, Error>
where
    R: FnMut(&[f64], &mut [f64]),
    J: FnMut(&[f64]) -> Matrix,
{
    cfg.validate()?;
    let n = guess.len();
    let mut y = guess.to_vec();
    let mut r = alloc::vec![0.0; n];
    residual(&y, &mut r);
    let mut rnorm = max_norm(&r);
    let mut iterations = 0;

    let mut trial = alloc::vec![0.0; n];
    let mut r_trial = alloc::vec![0.0; n];
    // At least one update unless the guess is exact: on tiny steps the guess
    // can already sit below an absolute tolerance without being the solution.
    while (rnorm > cfg.tol || (iterations == 0 && rnorm > 0.0)) && iterations < cfg.max_iter {
        if !rnorm.is_finite() {
            break;
        }
        let jac = jacobian(&y);
        if jac.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: jac.dim(),
            });
        }
        let delta = jac.lu()?.solve(&r);

        let mut scale = 1.0;
        let mut halvings = 0;
        loop {
            for i in 0..n {
                trial[i] = y[i] - scale * delta[i];
            }
            residual(&trial, &mut r_trial);
            let trial_norm = max_norm(&r_trial);
            let improved = trial_norm < rnorm;
            if !cfg.damping || improved || halvings == MAX_HALVINGS || trial_norm <= cfg.tol {
                break;
            }
            scale *= 0.5;
            halvings += 1;
        }
        core::mem::swap(&mut y, &mut trial);
        core::mem::swap(&mut r, &mut r_trial);
        rnorm = max_norm(&r);
        iterations += 1;
    }

    Ok(SolveOutcome {
        y,
        iterations,
        converged: rnorm <= cfg.tol,
        final_residual: rnorm,
    })
}

/// Solves the backward Euler stage `y - y_old - dt f(t_new, y) = 0`.
/// The Newton matrix is `I - dt J`.
pub fn solve_backward_euler(
    system: &dyn OdeSystem,
    t_new: f64,
    y_old: &[f64],
    dt: f64,
    guess: &[f64],
    cfg: &NewtonConfig,
) -> Result<SolveOutcome, Error> {
    if !(dt > 0.0) {
        return Err(domain("backward Euler step must be positive"));
    }
    let n = system.dim();
    if y_old.len() != n || guess.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if y_old.len() != n {
                y_old.len()
            } else {
                guess.len()
            },
        });
    }
    let mut f = alloc::vec![0.0; n];
    solve_residual(
        |y, r| {
            system.rhs(t_new, y, &mut f);
            for i in 0..n {
                r[i] = y[i] - y_old[i] - dt * f[i];
            }
        },
        |y| {
            let mut m = jacobian_or_fd(system, t_new, y);
            m.shift_scale(1.0, -dt);
            m
        },
        guess,
        cfg,
    )
}
