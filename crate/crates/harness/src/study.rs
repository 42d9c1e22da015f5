use dln_core::diagnostics::trajectory_difference;
use dln_core::sequence::{self, RatioBounds, Xorshift64Star};
use dln_core::{
    g_norm_sq, integrate_adaptive, integrate_steps, integrate_steps_with, monotonicity_check,
    DlnParameters, NewtonConfig, StepperKind, Trajectory,
};
use serde::Serialize;

use crate::config::{load_instance, Mode, RunConfig};
use crate::HarnessError;

/// Errors below this are treated as roundoff; orders computed from them are
/// not reported.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Outcome of a single `run`.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub trajectory: Trajectory,
    /// Max-norm error at the final node, when an exact solution exists.
    pub terminal_error: Option<f64>,
    /// Attempted steps that were rejected (adaptive mode only).
    pub rejected: usize,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Step sequence for fixed and random-ratio modes.
pub fn step_sequence(
    mode: Mode,
    k0: f64,
    span: f64,
    bounds: RatioBounds,
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    match mode {
        Mode::Fixed => sequence::fixed_steps(k0, span),
        Mode::RandomRatio => sequence::random_ratio_steps(k0, span, bounds, seed),
        Mode::Adaptive => {
            return Err(HarnessError::Usage(
                "adaptive mode has no fixed step sequence".into(),
            ))
        }
    }
    .map_err(HarnessError::usage)
}

pub fn run(cfg: &RunConfig) -> Result<RunResult, HarnessError> {
    cfg.validate()?;
    let params = cfg.params()?;
    let inst = cfg.instance()?;
    let newton = NewtonConfig::default();
    let (trajectory, rejected) = match cfg.mode {
        Mode::Adaptive => {
            let out = integrate_adaptive(&inst, params, &cfg.controller(), &newton)
                .map_err(HarnessError::runtime)?;
            (out.trajectory, out.rejected)
        }
        mode => {
            let steps = step_sequence(
                mode,
                cfg.k0,
                inst.t_end - inst.t0,
                cfg.ratio_bounds,
                cfg.seed,
            )?;
            let tol = cfg.controller().tolerances();
            let traj = integrate_steps_with(
                inst.system.as_ref(),
                inst.t0,
                &inst.y0,
                &steps,
                params,
                &newton,
                StepperKind::Refactorized,
                tol,
            )
            .map_err(HarnessError::runtime)?;
            (traj, 0)
        }
    };
    let terminal_error = inst
        .exact(trajectory.last_time())
        .map(|y| max_abs_diff(&y, trajectory.last_state()));
    Ok(RunResult {
        trajectory,
        terminal_error,
        rejected,
    })
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    /// Mean step size of the level.
    pub base_k: f64,
    pub terminal_error: f64,
    /// `log2(error[level-1] / error[level])`; absent on level 0 and when
    /// either error sits at the roundoff floor.
    pub observed_order: Option<f64>,
    /// Error at or below [`ROUNDOFF_FLOOR`]; the order is not meaningful.
    pub at_roundoff: bool,
}

/// Settings of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub problem: String,
    pub delta: f64,
    pub levels: usize,
    /// `Fixed` or `RandomRatio`; the latter repeats a frozen ratio pattern.
    pub mode: Mode,
    pub seed: u64,
    pub ratio_bounds: RatioBounds,
    /// Mean step of level 0; defaults to a twentieth of the interval.
    pub base_k: Option<f64>,
    pub t_end: Option<f64>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            problem: "decay".into(),
            delta: dln_core::DEFAULT_DELTA,
            levels: 5,
            mode: Mode::Fixed,
            seed: 0,
            ratio_bounds: RatioBounds::default(),
            base_k: None,
            t_end: None,
        }
    }
}

/// Length of the frozen ratio pattern in random-ratio convergence studies.
const PATTERN_HALF_LEN: usize = 4;

/// Step sequence for refinement `level`: halves the step each level, keeping
/// the ratio pattern (random-ratio mode) fixed.
pub fn level_steps(
    cfg: &ConvergenceConfig,
    span: f64,
    level: usize,
) -> Result<Vec<f64>, HarnessError> {
    let base = cfg.base_k.unwrap_or(span / 20.0);
    if !(base > 0.0 && base.is_finite()) {
        return Err(HarnessError::Usage("base step must be positive".into()));
    }
    let n0 = (span / base).round().max(1.0) as usize;
    let scale = 1usize << level;
    match cfg.mode {
        Mode::Fixed => Ok(vec![span / (n0 * scale) as f64; n0 * scale]),
        Mode::RandomRatio => {
            let pattern = sequence::ratio_pattern(PATTERN_HALF_LEN, cfg.ratio_bounds, cfg.seed);
            let cycles = n0.div_ceil(pattern.len()).max(1) * scale;
            sequence::patterned_steps(&pattern, cycles, span).map_err(HarnessError::usage)
        }
        Mode::Adaptive => Err(HarnessError::Usage(
            "convergence studies use fixed or random-ratio steps".into(),
        )),
    }
}

/// Runs all levels (in parallel threads) and tabulates the observed orders.
pub fn converge(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>, HarnessError> {
    let params = DlnParameters::new(cfg.delta).map_err(HarnessError::usage)?;
    let probe = load_instance(&cfg.problem, cfg.t_end)?;
    if probe.exact(probe.t0).is_none() {
        return Err(HarnessError::Usage(format!(
            "problem `{}` has no exact solution; convergence studies need one",
            cfg.problem
        )));
    }
    if cfg.levels == 0 {
        return Err(HarnessError::Usage("at least one level is required".into()));
    }
    let span = probe.t_end - probe.t0;
    let sequences = (0..cfg.levels)
        .map(|l| level_steps(cfg, span, l))
        .collect::<Result<Vec<_>, _>>()?;

    let results: Vec<Result<(f64, f64), HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = sequences
            .iter()
            .map(|steps| {
                s.spawn(move || {
                    let inst = load_instance(&cfg.problem, cfg.t_end)?;
                    let traj = integrate_steps(
                        inst.system.as_ref(),
                        inst.t0,
                        &inst.y0,
                        steps,
                        params,
                        &NewtonConfig::default(),
                        StepperKind::Refactorized,
                    )
                    .map_err(HarnessError::runtime)?;
                    let exact = inst.exact(traj.last_time()).expect("checked above");
                    Ok((
                        span / steps.len() as f64,
                        max_abs_diff(&exact, traj.last_state()),
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(HarnessError::Runtime("worker panicked".into())))
            })
            .collect()
    });

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cfg.levels);
    for (level, res) in results.into_iter().enumerate() {
        let (base_k, err) = res?;
        let at_roundoff = err <= ROUNDOFF_FLOOR;
        let observed_order = match rows.last() {
            Some(prev) if !prev.at_roundoff && !at_roundoff => {
                Some((prev.terminal_error / err).log2())
            }
            _ => None,
        };
        rows.push(ConvergenceRow {
            level,
            base_k,
            terminal_error: err,
            observed_order,
            at_roundoff,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub problem: String,
    pub delta: f64,
    pub steps: usize,
    pub seed: u64,
    pub max_discrepancy: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub const EQUIVALENCE_THRESHOLD: f64 = 1e-9;

/// `count` random-ratio steps scaled to cover the problem's interval
/// exactly. Scaling leaves the ratios untouched.
fn audit_steps(
    span: f64,
    count: usize,
    bounds: RatioBounds,
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    if count < 2 {
        return Err(HarnessError::Usage(
            "at least two steps are required".into(),
        ));
    }
    let mut steps =
        sequence::random_ratio_steps_n(1.0, count, bounds, seed).map_err(HarnessError::usage)?;
    let scale = span / steps.iter().sum::<f64>();
    steps.iter_mut().for_each(|k| *k *= scale);
    Ok(steps)
}

/// Runs both steppers over the same random step sequence.
pub fn equivalence(
    problem: &str,
    delta: f64,
    steps: usize,
    seed: u64,
    bounds: RatioBounds,
) -> Result<EquivalenceReport, HarnessError> {
    let params = DlnParameters::new(delta).map_err(HarnessError::usage)?;
    let inst = load_instance(problem, None)?;
    let seq = audit_steps(inst.t_end - inst.t0, steps, bounds, seed)?;
    let newton = NewtonConfig::default();
    let trajectories: Vec<Result<Trajectory, HarnessError>> = std::thread::scope(|s| {
        [StepperKind::Refactorized, StepperKind::OneLeg]
            .map(|kind| {
                let seq = &seq;
                s.spawn(move || {
                    let inst = load_instance(problem, None)?;
                    integrate_steps(
                        inst.system.as_ref(),
                        inst.t0,
                        &inst.y0,
                        seq,
                        params,
                        &newton,
                        kind,
                    )
                    .map_err(HarnessError::runtime)
                })
            })
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(HarnessError::Runtime("worker panicked".into())))
            })
            .collect()
    });
    let mut it = trajectories.into_iter();
    let a = it.next().expect("two runs")?;
    let b = it.next().expect("two runs")?;
    let max_discrepancy = a.max_discrepancy(&b);
    Ok(EquivalenceReport {
        problem: problem.to_string(),
        delta,
        steps,
        seed,
        max_discrepancy,
        threshold: EQUIVALENCE_THRESHOLD,
        passed: max_discrepancy <= EQUIVALENCE_THRESHOLD,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyAudit {
    pub problem: String,
    pub delta: f64,
    pub steps: usize,
    pub seed: u64,
    /// G-norm squared of the difference, one entry per consecutive node pair.
    pub g_norm_sq: Vec<f64>,
    /// Index of the first pair whose G-norm grew beyond the slack.
    pub first_violation: Option<usize>,
    pub max_energy_residual: f64,
    pub passed: bool,
}

/// Integrates two perturbed copies of a contractive problem over one random
/// step sequence and checks that the G-norm of their difference never grows.
pub fn energy_audit(
    problem: &str,
    delta: f64,
    steps: usize,
    seed: u64,
    bounds: RatioBounds,
) -> Result<EnergyAudit, HarnessError> {
    let params = DlnParameters::new(delta).map_err(HarnessError::usage)?;
    let inst = load_instance(problem, None)?;
    if !inst.system.is_contractive() {
        return Err(HarnessError::Usage(format!(
            "problem `{problem}` is not contractive; the energy audit needs a contractive problem"
        )));
    }
    let seq = audit_steps(inst.t_end - inst.t0, steps, bounds, seed)?;
    let mut rng = Xorshift64Star::new(seed ^ 0xA5A5_A5A5_A5A5_A5A5);
    let y0b: Vec<f64> = inst
        .y0
        .iter()
        .map(|y| y + 0.2 * (rng.next_f64() - 0.5))
        .collect();

    let newton = NewtonConfig::default();
    let sys = inst.system.as_ref();
    let a = integrate_steps(
        sys,
        inst.t0,
        &inst.y0,
        &seq,
        params,
        &newton,
        StepperKind::Refactorized,
    )
    .map_err(HarnessError::runtime)?;
    let b = integrate_steps(
        sys,
        inst.t0,
        &y0b,
        &seq,
        params,
        &newton,
        StepperKind::Refactorized,
    )
    .map_err(HarnessError::runtime)?;

    let diff = trajectory_difference(&a.states, &b.states);
    let norms: Vec<f64> = diff
        .windows(2)
        .map(|w| g_norm_sq(&params, &w[1], &w[0]))
        .collect();
    let first_violation = monotonicity_check(&diff, &params).err();
    let max_energy_residual = a
        .records
        .iter()
        .chain(&b.records)
        .map(|r| r.ledger.relative_residual())
        .fold(0.0, f64::max);
    Ok(EnergyAudit {
        problem: problem.to_string(),
        delta,
        steps,
        seed,
        g_norm_sq: norms,
        first_violation,
        max_energy_residual,
        passed: first_violation.is_none(),
    })
}
