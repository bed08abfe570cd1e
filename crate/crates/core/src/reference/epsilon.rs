use std::sync::Arc;

use rayon::prelude::*;

use crate::cell::{CellCoefficients, Quantizer, SampleCache};
use crate::error::{Error, Result, ResultExt};
use crate::fem::parallel::{dot, sum};
use crate::fem::{
    interface_scalar_load, interface_vector_load, Assembler, ConstrainedSystem, ConstraintSet, CsrMatrix, SolverOptions,
};
use crate::kinematics::{InterfaceCoefficients, MaterialParams, Phase, TransformedCoefficients};
use crate::mesh::{build_epsilon_mesh, EpsilonMesh};
use crate::problem::Problem;
use crate::tensor::Vec3;

/// Implicit-Euler solver of the fixed-domain problem on the unit
/// square/cube tiled with cells of size `eps`.
pub struct EpsilonSolver {
    pub problem: Problem,
    pub eps: f64,
    pub mesh: Arc<EpsilonMesh>,
    /// Inclusion coefficients carry the `eps` scalings.
    pub material: MaterialParams,
    /// Phase-local index of every cell-mesh simplex.
    local_cell: Vec<usize>,
    per_tile: bool,
    mechanics_constraints: ConstraintSet,
    solver: SolverOptions,
    cache: SampleCache<EpsilonOperators>,
}

/// Pulled-back coefficients of every tile at one time.
pub struct EpsilonFields<'a> {
    solver: &'a EpsilonSolver,
    tiles: Vec<Arc<CellCoefficients>>,
    nq: usize,
}

impl EpsilonFields<'_> {
    fn tile(&self, tile: usize) -> &CellCoefficients {
        &self.tiles[if self.solver.per_tile { tile } else { 0 }]
    }

    /// Coefficients at flat quadrature index `k` of the ε-mesh; the velocity
    /// is still the cell velocity.
    pub fn bulk(&self, k: usize) -> &TransformedCoefficients {
        let s = self.solver;
        let e = k / self.nq;
        let (tile, c) = s.mesh.element_origin[e];
        let cc = self.tile(tile);
        let list = match s.mesh.mesh.phases[e] {
            Phase::A => &cc.matrix,
            Phase::B => &cc.inclusion,
        };
        &list[s.local_cell[c] * self.nq + k % self.nq]
    }

    /// Interface coefficients of ε-facet `k`.
    pub fn facet(&self, k: usize) -> &InterfaceCoefficients {
        let nf = self.solver.problem.cell.cell.interface.len();
        &self.tile(k / nf).interface[k % nf]
    }
}

/// Discrete operators at one time for the step size of the problem.
pub struct EpsilonOperators {
    pub t: f64,
    /// `∫ c_ref φ_i φ_j`.
    pub capacity: CsrMatrix,
    pub conduction: CsrMatrix,
    heat_matrix: CsrMatrix,
    heat: ConstrainedSystem,
    /// `∫ γ_ref : ∇φ_j ψ_i`, temperature rows by displacement columns.
    pub dissipation: CsrMatrix,
    pub elastic: ConstrainedSystem,
    /// `∫ α_ref : ∇φ_i ψ_j`, displacement rows by temperature columns.
    pub expansion: CsrMatrix,
    transport: CsrMatrix,
    dissipation_transport: CsrMatrix,
    pub heat_load: Vec<f64>,
    pub force_load: Vec<f64>,
}

/// Solution at one time level with what the next step needs from it.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonState {
    pub step: usize,
    pub t: f64,
    pub theta: Vec<f64>,
    pub displacement: Vec<f64>,
    /// `M_c Θ + D U`.
    pub content: Vec<f64>,
    /// Transport terms, applied explicitly in the next step.
    pub transport: Vec<f64>,
    pub iterations: usize,
    pub change: f64,
    pub mechanics_residual: f64,
}

/// Per-step diagnostics of an ε run.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonRecord {
    pub step: usize,
    pub t: f64,
    pub iterations: usize,
    pub change: f64,
    pub heat_content: f64,
    pub theta_l2: f64,
    pub displacement_l2: f64,
    pub mechanics_residual: f64,
}

impl EpsilonRecord {
    pub const HEADER: &'static str =
        "step,t,iterations,change,heat_content,theta_l2,displacement_l2,mechanics_residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.step,
            self.t,
            self.iterations,
            self.change,
            self.heat_content,
            self.theta_l2,
            self.displacement_l2,
            self.mechanics_residual
        )
    }
}

/// Complete time history of an ε run.
#[derive(Clone, Debug)]
pub struct EpsilonSolution {
    pub eps: f64,
    pub problem: Problem,
    pub mesh: Arc<EpsilonMesh>,
    pub times: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub displacement: Vec<Vec<f64>>,
    pub records: Vec<EpsilonRecord>,
}

impl EpsilonSolution {
    pub fn records_csv(&self) -> String {
        let mut s = String::from(EpsilonRecord::HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Largest relative change of the total stored heat between steps.
    pub fn max_content_drift(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].heat_content - w[0].heat_content).abs() / w[0].heat_content.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

impl EpsilonSolver {
    pub fn new(problem: Problem, eps: f64) -> Result<Self> {
        let mesh = build_epsilon_mesh(&problem.cell.cell, eps)?;
        let eps = mesh.eps;
        let dim = problem.dim();
        let mut local_cell = vec![usize::MAX; problem.cell.cell.mesh.n_cells()];
        for pd in [&problem.cell.matrix, &problem.cell.inclusion] {
            for (l, &c) in pd.parent_cell.iter().enumerate() {
                local_cell[c] = l;
            }
        }
        let mut mechanics_constraints = ConstraintSet::new(mesh.mesh.n_vertices() * dim);
        for (v, b) in mesh.boundary_vertex.iter().enumerate() {
            if *b {
                for a in 0..dim {
                    mechanics_constraints.pin(v * dim + a, 0.0)?;
                }
            }
        }
        let per_tile = problem.transformation.depends_on_macro_point() || problem.sources.depends_on_position();
        // operators are rebuilt at every time level; cache overrides do not apply
        let q = Quantizer {
            time_step: if problem.transformation.is_static() && problem.sources.is_constant() {
                0.0
            } else {
                problem.step_size()
            },
            space_step: 0.0,
        };
        let solver = SolverOptions {
            dense_below: problem.coupling.solver.dense_below.max(1500),
            ..problem.coupling.solver
        };
        Ok(EpsilonSolver {
            material: problem.material.scaled(eps),
            problem,
            eps,
            mesh: Arc::new(mesh),
            local_cell,
            per_tile,
            mechanics_constraints,
            solver,
            cache: SampleCache::new(Quantizer {
                time_step: q.time_step,
                space_step: 0.0,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    /// Macroscopic point standing for a tile: its center.
    pub fn tile_center(&self, tile: usize) -> Vec3 {
        let mut x = self.mesh.tile_corner[tile];
        for a in 0..self.dim() {
            x[a] += 0.5 * self.eps;
        }
        x
    }

    /// Cell coefficients of every tile at time `t`; shared by all tiles
    /// when nothing depends on the macroscopic point.
    pub fn fields(&self, t: f64) -> Result<EpsilonFields<'_>> {
        let p = &self.problem;
        let compute = |tile: usize| {
            p.cell
                .coefficients(&p.transformation, &self.material, &p.sources, t, &self.tile_center(tile))
                .map(Arc::new)
                .context(|| format!("cell coefficients of tile {tile} at t = {t}"))
        };
        let tiles = if self.per_tile {
            (0..self.mesh.tile_corner.len()).into_par_iter().map(compute).collect::<Result<_>>()?
        } else {
            vec![compute(0)?]
        };
        Ok(EpsilonFields {
            solver: self,
            tiles,
            nq: Assembler::new(&self.mesh.mesh).n_qp(),
        })
    }

    fn build_operators(&self, t: f64) -> Result<EpsilonOperators> {
        let f = self.fields(t)?;
        let m = &self.mesh.mesh;
        let eps = self.eps;
        let dt = self.problem.step_size();
        let asm = Assembler::new(m);
        let capacity = asm.mass(|k| f.bulk(k).capacity)?;
        let conduction = asm.diffusion(|k| f.bulk(k).conductivity)?;
        let heat_matrix = capacity.scaled(1.0 / dt).add_scaled(&conduction, 1.0);
        let heat = ConstrainedSystem::new(&heat_matrix, &ConstraintSet::new(m.n_vertices()), self.solver)?;
        let elastic_matrix = asm.elasticity(|k| f.bulk(k).stiffness)?;
        let elastic = ConstrainedSystem::new(&elastic_matrix, &self.mechanics_constraints, self.solver)?;
        let coupling = &self.problem.coupling;
        let latent = if coupling.latent_heat_in_weff { self.material.latent_heat } else { 1.0 };
        let mut heat_load = asm.scalar_load(|k| f.bulk(k).heat_source);
        let mut force_load = asm.vector_load(|k| f.bulk(k).force);
        let facets = &self.mesh.interface;
        if !facets.is_empty() {
            let sink = interface_scalar_load(m, facets, |k| latent * eps * f.facet(k).normal_velocity)?;
            heat_load.iter_mut().zip(&sink).for_each(|(h, s)| *h -= coupling.latent_sign * s);
            let pull = interface_vector_load(m, facets, |k| f.facet(k).curvature_load * facets[k].normal * eps)?;
            force_load.iter_mut().zip(&pull).for_each(|(g, s)| *g += s);
        }
        Ok(EpsilonOperators {
            t,
            dissipation: asm.coupling(|k| f.bulk(k).dissipation)?.transpose(),
            expansion: asm.coupling(|k| f.bulk(k).expansion)?,
            transport: asm.advection(|k| f.bulk(k).velocity * (eps * f.bulk(k).capacity))?,
            dissipation_transport: asm.dissipation_advection(|k| (f.bulk(k).velocity * eps, f.bulk(k).dissipation))?,
            capacity,
            conduction,
            heat_matrix,
            heat,
            elastic,
            heat_load,
            force_load,
        })
    }

    /// Operators at time `t`, shared between equal quantized times.
    pub fn operators(&self, t: f64) -> Result<Arc<EpsilonOperators>> {
        self.cache.get_or_compute(t, &Vec3::zeros(), |rt, _| self.build_operators(rt))
    }

    fn solve_mechanics(&self, ops: &EpsilonOperators, theta: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, f64)> {
        let mut b = ops.expansion.matvec(theta);
        b.iter_mut().zip(&ops.force_load).for_each(|(bi, f)| *bi += f);
        let (u, _) = ops.elastic.solve(&b, guess).context(|| "ε mechanics".into())?;
        let au = ops.elastic.full_matrix().matvec(&u);
        let (mut r2, mut b2) = (0.0, 0.0);
        for (i, free) in ops.elastic.reduction.map.iter().enumerate() {
            if *free != usize::MAX {
                r2 += (au[i] - b[i]).powi(2);
                b2 += b[i] * b[i];
            }
        }
        Ok((u, if b2 > 0.0 { (r2 / b2).sqrt() } else { r2.sqrt() }))
    }

    fn finish(ops: &EpsilonOperators, theta: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut content = ops.capacity.matvec(theta);
        content.iter_mut().zip(&ops.dissipation.matvec(u)).for_each(|(c, d)| *c += d);
        let mut transport = ops.transport.matvec(theta);
        transport.iter_mut().zip(&ops.dissipation_transport.matvec(u)).for_each(|(c, d)| *c += d);
        (content, transport)
    }

    /// State at `t = 0` from the initial temperature, with the displacement
    /// in equilibrium.
    pub fn initial_state(&self) -> Result<EpsilonState> {
        let dim = self.dim();
        let theta: Vec<f64> = self.mesh.mesh.vertices.iter().map(|x| self.problem.initial.eval(x, dim)).collect();
        self.state_from(theta)
    }

    /// State at `t = 0` from a nodal temperature.
    pub fn state_from(&self, theta: Vec<f64>) -> Result<EpsilonState> {
        if theta.len() != self.mesh.mesh.n_vertices() {
            return Err(Error::Mesh(format!(
                "{} temperature values for {} vertices",
                theta.len(),
                self.mesh.mesh.n_vertices()
            )));
        }
        let t0 = self.problem.time(0);
        let ops = self.operators(t0)?;
        let (u, residual) = self.solve_mechanics(&ops, &theta, None)?;
        let (content, transport) = Self::finish(&ops, &theta, &u);
        Ok(EpsilonState {
            step: 0,
            t: t0,
            theta,
            displacement: u,
            content,
            transport,
            iterations: 0,
            change: 0.0,
            mechanics_residual: residual,
        })
    }

    /// One implicit-Euler step; heat and mechanics are iterated to the
    /// fixed-point tolerance unless the temperature ignores the deformation.
    pub fn step(&self, state: &EpsilonState) -> Result<EpsilonState> {
        let p = &self.problem;
        let step = state.step + 1;
        if step > p.n_steps() {
            return Err(Error::Mesh(format!("step {step} beyond the final time")));
        }
        let t = p.time(step);
        let dt = p.step_size();
        let ops = self.operators(t)?;
        let mass = Assembler::new(&self.mesh.mesh).mass(|_| 1.0)?;
        let column_total = sum(&ops.heat_matrix.row_sums());
        let decoupled = p.heat_ignores_mechanics();
        let dim = self.dim();
        let mut theta = state.theta.clone();
        let mut u = state.displacement.clone();
        let mut iterations = 0;
        let (mut change, mut residual);
        loop {
            iterations += 1;
            let du = ops.dissipation.matvec(&u);
            let b: Vec<f64> = (0..theta.len())
                .map(|i| (state.content[i] - du[i]) / dt + ops.heat_load[i] - state.transport[i])
                .collect();
            let (mut next, _) = ops.heat.solve(&b, Some(&theta)).context(|| format!("ε heat at step {step}"))?;
            let shift = (sum(&b) - sum(&ops.heat_matrix.matvec(&next))) / column_total;
            next.iter_mut().for_each(|v| *v += shift);
            let (next_u, r) = self.solve_mechanics(&ops, &next, Some(&u))?;
            residual = r;
            let scale = 1.0 + weighted_norm(&mass, &next, 1);
            let dtheta: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let du: Vec<f64> = next_u.iter().zip(&u).map(|(a, b)| a - b).collect();
            change = (weighted_norm(&mass, &dtheta, 1) + weighted_norm(&mass, &du, dim)) / scale;
            theta = next;
            u = next_u;
            if decoupled || change < p.coupling.fixed_point_tol {
                break;
            }
            if iterations >= p.coupling.fixed_point_max_iter {
                return Err(Error::FixedPoint { iterations, change }).context(|| format!("ε step {step}, t = {t}"));
            }
        }
        let (content, transport) = Self::finish(&ops, &theta, &u);
        let tq = self.cache.quantizer.key(t, &Vec3::zeros())[0];
        self.cache.retain(|k| k[0] >= tq);
        Ok(EpsilonState {
            step,
            t,
            theta,
            displacement: u,
            content,
            transport,
            iterations,
            change,
            mechanics_residual: residual,
        })
    }

    pub fn record(&self, state: &EpsilonState) -> Result<EpsilonRecord> {
        let mass = Assembler::new(&self.mesh.mesh).mass(|_| 1.0)?;
        Ok(EpsilonRecord {
            step: state.step,
            t: state.t,
            iterations: state.iterations,
            change: state.change,
            heat_content: sum(&state.content),
            theta_l2: weighted_norm(&mass, &state.theta, 1),
            displacement_l2: weighted_norm(&mass, &state.displacement, self.dim()),
            mechanics_residual: state.mechanics_residual,
        })
    }

    /// Runs all steps from `initial`, keeping every time level.
    pub fn run_from(&self, initial: EpsilonState) -> Result<EpsilonSolution> {
        let n = self.problem.n_steps();
        let mut sol = EpsilonSolution {
            eps: self.eps,
            problem: self.problem.clone(),
            mesh: self.mesh.clone(),
            times: Vec::with_capacity(n + 1),
            theta: Vec::with_capacity(n + 1),
            displacement: Vec::with_capacity(n + 1),
            records: Vec::with_capacity(n + 1),
        };
        let mut state = initial;
        loop {
            sol.records.push(self.record(&state)?);
            sol.times.push(state.t);
            sol.theta.push(state.theta.clone());
            sol.displacement.push(state.displacement.clone());
            if state.step == n {
                break;
            }
            state = self.step(&state)?;
        }
        Ok(sol)
    }

    pub fn run(&self) -> Result<EpsilonSolution> {
        self.run_from(self.initial_state()?)
    }
}

/// Solves the ε-problem of `problem` with cell size `eps`.
pub fn solve_epsilon_problem(problem: &Problem, eps: f64) -> Result<EpsilonSolution> {
    EpsilonSolver::new(problem.clone(), eps)?.run().context(|| format!("ε = {eps}"))
}

/// `(Σ_c xᵀ M x)^{1/2}` over the `block` interleaved components of `x`.
pub(crate) fn weighted_norm(mass: &CsrMatrix, x: &[f64], block: usize) -> f64 {
    let n = mass.nrows;
    let mut total = 0.0;
    for c in 0..block {
        let v: Vec<f64> = (0..n).map(|i| x[i * block + c]).collect();
        total += dot(&v, &mass.matvec(&v));
    }
    total.max(0.0).sqrt()
}
