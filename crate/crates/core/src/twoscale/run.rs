use std::fmt::Write as _;

use crate::error::{Result, ResultExt};
use crate::fem::{parallel::sum, Assembler};
use crate::twoscale::solver::{TwoScaleSolver, TwoScaleState};

/// Per-step diagnostics of a two-scale run.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub iterations: usize,
    pub change: f64,
    pub theta_l2: f64,
    pub theta_mean: f64,
    pub displacement_l2: f64,
    /// Total stored heat `Σ_i P_i`.
    pub heat_content: f64,
    pub heat_energy: f64,
    pub mechanics_residual: f64,
    pub trace_defect: f64,
    pub decimation_gap: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub records: Vec<StepRecord>,
}

impl Diagnostics {
    pub const HEADER: &'static str = "step,t,iterations,change,theta_l2,theta_mean,displacement_l2,heat_content,heat_energy,mechanics_residual,trace_defect,decimation_gap";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.step,
                r.t,
                r.iterations,
                r.change,
                r.theta_l2,
                r.theta_mean,
                r.displacement_l2,
                r.heat_content,
                r.heat_energy,
                r.mechanics_residual,
                r.trace_defect,
                r.decimation_gap
            );
        }
        s
    }

    /// Largest relative change of the stored heat between consecutive steps.
    pub fn max_content_drift(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].heat_content - w[0].heat_content).abs() / w[0].heat_content.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Result of [`run_simulation`].
#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub diagnostics: Diagnostics,
    pub final_state: TwoScaleState,
    /// `(step, t, θ_A, u_A)` at the requested snapshot steps.
    pub snapshots: Vec<(usize, f64, Vec<f64>, Vec<f64>)>,
    /// Macro temperature after every step, starting with the initial one.
    pub history: Vec<Vec<f64>>,
}

impl TwoScaleSolver {
    pub fn record(&self, state: &TwoScaleState) -> Result<StepRecord> {
        let asm = Assembler::new(&self.mesh.mesh);
        let mass = asm.mass(|_| 1.0)?;
        let theta_sq = crate::fem::parallel::dot(&state.theta, &mass.matvec(&state.theta));
        let dim = self.dim();
        let nv = self.mesh.mesh.n_vertices();
        let mut u_sq = 0.0;
        for c in 0..dim {
            let comp: Vec<f64> = (0..nv).map(|v| state.displacement[v * dim + c]).collect();
            u_sq += crate::fem::parallel::dot(&comp, &mass.matvec(&comp));
        }
        let ones = vec![1.0; nv];
        Ok(StepRecord {
            step: state.step,
            t: state.t,
            iterations: state.iterations,
            change: state.change,
            theta_l2: theta_sq.max(0.0).sqrt(),
            theta_mean: crate::fem::parallel::dot(&ones, &mass.matvec(&state.theta)),
            displacement_l2: u_sq.max(0.0).sqrt(),
            heat_content: sum(&state.content),
            heat_energy: self.heat_energy(state)?,
            mechanics_residual: state.mechanics_residual,
            trace_defect: self.trace_defect(state),
            decimation_gap: self.decimation_gap(state),
        })
    }
}

/// Steps from `t = 0` to the final time; `snapshot_every = Some(k)` keeps
/// the macro fields every `k` steps and at the end.
pub fn run_simulation(solver: &TwoScaleSolver, snapshot_every: Option<usize>) -> Result<SimulationOutput> {
    let mut state = solver.initial_state()?;
    let mut diagnostics = Diagnostics::default();
    let mut snapshots = Vec::new();
    let mut history = vec![state.theta.clone()];
    let n = solver.problem.n_steps();
    let keep = |step: usize| snapshot_every.is_some_and(|k| k > 0 && (step % k == 0 || step == n));
    diagnostics.records.push(solver.record(&state)?);
    if keep(0) {
        snapshots.push((0, state.t, state.theta.clone(), state.displacement.clone()));
    }
    for step in 1..=n {
        state = solver.macro_step(&state).context(|| format!("time step {step}"))?;
        diagnostics.records.push(solver.record(&state)?);
        history.push(state.theta.clone());
        if keep(step) {
            snapshots.push((step, state.t, state.theta.clone(), state.displacement.clone()));
        }
    }
    Ok(SimulationOutput {
        diagnostics,
        final_state: state,
        snapshots,
        history,
    })
}
