//! Variable-step DLN time integration.
//!
//! The Dahlquist–Liniger–Nevanlinna (DLN) family is a one-parameter family of
//! one-leg, two-step methods for `y' = f(t, y)`. Every member is second order
//! and G-stable for arbitrary step-size sequences. This crate advances the
//! method as a backward Euler solve wrapped in two cheap linear filters:
//!
//! ```text
//!   (y_{n-1}, y_n) --pre-process--> y_old --backward Euler--> y_new --post-process--> y_{n+1}
//! ```
//!
//! A direct solve of the one-leg formula is kept alongside as a reference
//! path, together with a differentiation-defect error estimator, a step-size
//! controller and the per-step G-norm energy balance.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Elementary functions come from `libm`, so results are identical
//! across targets.
//!
//! ```
//! use dln_core::{problem, DlnParameters, NewtonConfig, StepperKind, integrate_steps};
//!
//! let inst = problem::registry_lookup("decay").unwrap();
//! let params = DlnParameters::new(2.0 / 3.0).unwrap();
//! let steps = vec![0.01; 100];
//! let traj = integrate_steps(
//!     inst.system.as_ref(), inst.t0, &inst.y0, &steps, params,
//!     &NewtonConfig::default(), StepperKind::Refactorized,
//! ).unwrap();
//! let err = (traj.last_state()[0] - (-1.0f64).exp()).abs();
//! assert!(err < 1e-5);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adaptivity;
pub mod coefficients;
pub mod diagnostics;
mod driver;
mod error;
pub mod linalg;
mod math;
pub mod newton;
pub mod problem;
pub mod sequence;
pub mod stepper;

pub use adaptivity::{integrate_adaptive, AdaptiveRun, ControllerConfig, LteEstimate, Tolerances};
pub use coefficients::{g_weights, CoefficientSet, DlnParameters, StepWindow, DEFAULT_DELTA};
pub use diagnostics::{energy_ledger, g_norm_sq, monotonicity_check, EnergyLedger};
pub use driver::{integrate_steps, integrate_steps_with, StepRecord, StepperKind, Trajectory};
pub use error::Error;
pub use newton::{NewtonConfig, SolveOutcome};
pub use problem::{OdeSystem, ProblemInstance};
pub use stepper::{StepReport, StepState};

pub type Result<T, E = Error> = core::result::Result<T, E>;
