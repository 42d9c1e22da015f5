use alloc::vec::Vec;

use crate::adaptivity::{estimate_step_error, LteEstimate, Tolerances};
use crate::coefficients::DlnParameters;
use crate::diagnostics::{energy_ledger, EnergyLedger};
use crate::error::{domain, Error};
use crate::newton::NewtonConfig;
use crate::problem::OdeSystem;
use crate::stepper::{
    bootstrap_first_step, dln_step_oneleg, dln_step_refactorized, StepReport, StepState,
};

/// Which formulation advances the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepperKind {
    /// Pre-process, backward Euler, post-process.
    Refactorized,
    /// Direct solve of the one-leg formula.
    OneLeg,
}

impl StepperKind {
    pub(crate) fn step(
        self,
        system: &dyn OdeSystem,
        state: &StepState,
        params: &DlnParameters,
        k_n: f64,
        cfg: &NewtonConfig,
    ) -> Result<StepReport, Error> {
        match self {
            StepperKind::Refactorized => dln_step_refactorized(system, state, params, k_n, cfg),
            StepperKind::OneLeg => dln_step_oneleg(system, state, params, k_n, cfg),
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the node this step produced (`y_n`, with `y_0` the initial value).
    pub n: usize,
    pub t: f64,
    pub k: f64,
    pub eps: f64,
    /// Absent while fewer than four nodes are available.
    pub lte: Option<LteEstimate>,
    pub ledger: EnergyLedger,
    pub newton_iters: usize,
    pub newton_residual: f64,
    pub accepted: bool,
}

impl StepRecord {
    pub(crate) fn from_report(
        n: usize,
        params: &DlnParameters,
        state: &StepState,
        report: &StepReport,
        lte: Option<LteEstimate>,
        accepted: bool,
    ) -> Self {
        Self {
            n,
            t: report.t_next,
            k: report.window.k_n,
            eps: report.window.eps,
            lte,
            ledger: energy_ledger(
                params,
                &report.coefficients,
                &report.y_next,
                &state.y_curr,
                &state.y_prev,
            ),
            newton_iters: report.newton.iterations,
            newton_residual: report.newton.final_residual,
            accepted,
        }
    }
}

/// Accepted nodes and the record of each step that produced them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `records[i]` produced `states[i + 1]`.
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last_state(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    /// Max-norm distance between matching nodes of two trajectories.
    pub fn max_discrepancy(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| crate::math::abs(x - y)))
            .fold(0.0, f64::max)
    }

    pub(crate) fn push(&mut self, t: f64, y: Vec<f64>) {
        self.times.push(t);
        self.states.push(y);
    }
}

/// Integrates over a prescribed step sequence. `steps[0]` is the start-up
/// midpoint step; every later step uses `params`.
pub fn integrate_steps(
    system: &dyn OdeSystem,
    t0: f64,
    y0: &[f64],
    steps: &[f64],
    params: DlnParameters,
    newton: &NewtonConfig,
    kind: StepperKind,
) -> Result<Trajectory, Error> {
    integrate_steps_with(
        system,
        t0,
        y0,
        steps,
        params,
        newton,
        kind,
        Tolerances::default(),
    )
}

/// As [`integrate_steps`], weighting the error estimates with `tol`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_steps_with(
    system: &dyn OdeSystem,
    t0: f64,
    y0: &[f64],
    steps: &[f64],
    params: DlnParameters,
    newton: &NewtonConfig,
    kind: StepperKind,
    tol: Tolerances,
) -> Result<Trajectory, Error> {
    if steps.is_empty() {
        return Err(domain("empty step sequence"));
    }
    if y0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: y0.len(),
        });
    }
    let mut traj = Trajectory::default();
    traj.push(t0, y0.to_vec());

    let (mut state, report) = bootstrap_first_step(system, t0, y0, steps[0], newton)?;
    let phantom = StepState::new(t0 - steps[0], y0.to_vec(), t0, y0.to_vec())?;
    traj.records.push(StepRecord::from_report(
        1,
        &DlnParameters::midpoint(),
        &phantom,
        &report,
        None,
        true,
    ));
    traj.push(state.t_curr, state.y_curr.clone());

    for (i, &k) in steps.iter().enumerate().skip(1) {
        let report = kind.step(system, &state, &params, k, newton)?;
        if !report.converged() {
            return Err(Error::NewtonFailure {
                t: state.t_curr,
                iterations: report.newton.iterations,
                residual: report.newton.final_residual,
            });
        }
        let lte = estimate_step_error(&params, &state, &report, tol).transpose()?;
        traj.records.push(StepRecord::from_report(
            i + 1,
            &params,
            &state,
            &report,
            lte,
            true,
        ));
        traj.push(report.t_next, report.y_next.clone());
        state.advance(report.t_next, report.y_next);
    }
    Ok(traj)
}
