use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, Mode, RatioArg, RunConfig};
use crate::output;
use crate::study::{self, ConvergenceConfig};
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(
    name = "dln",
    version,
    about = "Variable-step DLN integrator experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one problem and write per-step diagnostics.
    Run(CommonArgs),
    /// Convergence-order study over successively halved steps.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Compare the refactorized and one-leg steppers on random steps.
    Equivalence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Check that the G-norm of the difference of two solutions never grows.
    EnergyAudit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 500)]
        steps: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value = "decay")]
    pub problem: String,
    #[arg(long, default_value_t = dln_core::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    pub mode: Mode,
    /// Initial (fixed mode: constant) step; base step for `converge`.
    #[arg(long)]
    pub k0: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_rel: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Admissible step ratios as `lo,hi`.
    #[arg(long, default_value_t = RatioArg::default())]
    pub ratio_bounds: RatioArg,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub output_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl CommonArgs {
    pub fn to_config(&self) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            problem: self.problem.clone(),
            delta: self.delta,
            mode: self.mode,
            k0: self.k0.unwrap_or(d.k0),
            t_end: self.t_end,
            tol_abs: self.tol_abs,
            tol_rel: self.tol_rel,
            seed: self.seed,
            ratio_bounds: self.ratio_bounds.0,
            output_path: self.output_path.clone(),
            format: self.format,
        }
    }
}

fn with_output<F>(path: Option<&PathBuf>, stdout: &mut dyn Write, f: F) -> Result<(), HarnessError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| HarnessError::Runtime(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(stdout)?,
    }
    Ok(())
}

/// Executes a parsed command. `Ok(false)` means the command ran but its check
/// failed.
pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<bool, HarnessError> {
    match cmd {
        Command::Run(common) => {
            let cfg = common.to_config();
            let res = study::run(&cfg)?;
            with_output(cfg.output_path.as_ref(), stdout, |w| {
                output::write_run(w, &res, cfg.format)
            })?;
            Ok(true)
        }
        Command::Converge { common, levels } => {
            let cfg = ConvergenceConfig {
                problem: common.problem.clone(),
                delta: common.delta,
                levels: *levels,
                mode: common.mode,
                seed: common.seed,
                ratio_bounds: common.ratio_bounds.0,
                base_k: common.k0,
                t_end: common.t_end,
            };
            let rows = study::converge(&cfg)?;
            with_output(common.output_path.as_ref(), stdout, |w| {
                output::write_convergence(w, &rows, common.format)
            })?;
            Ok(true)
        }
        Command::Equivalence { common, steps } => {
            let rep = study::equivalence(
                &common.problem,
                common.delta,
                *steps,
                common.seed,
                common.ratio_bounds.0,
            )?;
            with_output(common.output_path.as_ref(), stdout, |w| {
                output::write_report(w, &rep, common.format)
            })?;
            Ok(rep.passed)
        }
        Command::EnergyAudit { common, steps } => {
            let rep = study::energy_audit(
                &common.problem,
                common.delta,
                *steps,
                common.seed,
                common.ratio_bounds.0,
            )?;
            with_output(common.output_path.as_ref(), stdout, |w| {
                output::write_report(w, &rep, common.format)
            })?;
            Ok(rep.passed)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(&cli.command, stdout) {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(stderr, "check failed");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
