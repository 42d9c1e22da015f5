//! Experiment harness for `dln-core`: step-sequence drivers, convergence
//! studies, equivalence checks, energy audits and CSV/JSON output.
//!
//! The `dln` binary is a thin wrapper over [`cli::run`].

pub mod cli;
pub mod config;
pub mod output;
pub mod study;

pub use config::{Format, Mode, RunConfig};
pub use study::{ConvergenceRow, EnergyAudit, EquivalenceReport, RunResult};

/// Failure of a harness command. Usage errors exit with 2, runtime errors
/// with 1.
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    Usage(String),
    Runtime(String),
}

impl HarnessError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Self::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}
