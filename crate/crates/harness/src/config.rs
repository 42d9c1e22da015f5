use std::path::PathBuf;
use std::str::FromStr;

use dln_core::sequence::RatioBounds;
use dln_core::{problem, ControllerConfig, DlnParameters, ProblemInstance};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fixed,
    RandomRatio,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A `lo,hi` pair of step ratios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatioArg(pub RatioBounds);

impl FromStr for RatioArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad lower ratio: {e}"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad upper ratio: {e}"))?;
        RatioBounds::new(lo, hi)
            .map(RatioArg)
            .map_err(|e| e.to_string())
    }
}

impl std::fmt::Display for RatioArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.0.lo, self.0.hi)
    }
}

/// Settings of a single `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub delta: f64,
    pub mode: Mode,
    pub k0: f64,
    /// Overrides the problem's default end time.
    pub t_end: Option<f64>,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub seed: u64,
    pub ratio_bounds: RatioBounds,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "decay".into(),
            delta: dln_core::DEFAULT_DELTA,
            mode: Mode::Fixed,
            k0: 0.01,
            t_end: None,
            tol_abs: 1e-6,
            tol_rel: 1e-6,
            seed: 0,
            ratio_bounds: RatioBounds::default(),
            output_path: None,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<DlnParameters, HarnessError> {
        DlnParameters::new(self.delta).map_err(HarnessError::usage)
    }

    pub fn instance(&self) -> Result<ProblemInstance, HarnessError> {
        load_instance(&self.problem, self.t_end)
    }

    pub fn controller(&self) -> ControllerConfig {
        ControllerConfig {
            tol_abs: self.tol_abs,
            tol_rel: self.tol_rel,
            k_initial: self.k0,
            ..ControllerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params()?;
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(HarnessError::Usage("--k0 must be positive".into()));
        }
        if self.mode == Mode::Adaptive {
            self.controller().validate().map_err(HarnessError::usage)?;
        }
        self.instance().map(drop)
    }
}

pub fn load_instance(name: &str, t_end: Option<f64>) -> Result<ProblemInstance, HarnessError> {
    let inst = problem::registry_lookup(name).map_err(HarnessError::usage)?;
    match t_end {
        Some(t) => inst.with_t_end(t).map_err(HarnessError::usage),
        None => Ok(inst),
    }
}
