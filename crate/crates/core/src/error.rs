use alloc::string::String;
use core::fmt;

/// Errors raised by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the admissible domain.
    Domain(String),
    /// The problem registry has no entry with this name.
    UnknownProblem {
        name: String,
        available: &'static [&'static str],
    },
    /// A state or matrix had the wrong size.
    DimensionMismatch { expected: usize, found: usize },
    /// The Newton matrix is singular to working precision.
    SingularMatrix,
    /// Newton failed on the start-up step.
    Bootstrap { iterations: usize, residual: f64 },
    /// Newton failed on a fixed-sequence step, which cannot be retried.
    NewtonFailure {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    /// The controller asked for a step below `k_min`.
    StepSizeUnderflow { t: f64, k: f64, k_min: f64 },
    /// Too many consecutive rejections at one time level.
    TooManyRejections { t: f64, attempts: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::UnknownProblem { name, available } => {
                write!(f, "unknown problem `{name}`; available: ")?;
                for (i, p) in available.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(p)?;
                }
                Ok(())
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::SingularMatrix => f.write_str("singular Newton matrix"),
            Error::Bootstrap {
                iterations,
                residual,
            } => write!(
                f,
                "start-up step did not converge ({iterations} iterations, residual {residual:e})"
            ),
            Error::NewtonFailure {
                t,
                iterations,
                residual,
            } => write!(
                f,
                "Newton did not converge at t = {t} ({iterations} iterations, residual {residual:e})"
            ),
            Error::StepSizeUnderflow { t, k, k_min } => {
                write!(f, "step size {k:e} below k_min = {k_min:e} at t = {t}")
            }
            Error::TooManyRejections { t, attempts } => {
                write!(f, "{attempts} consecutive rejected attempts at t = {t}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
