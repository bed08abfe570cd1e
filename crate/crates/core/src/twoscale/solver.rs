use std::sync::Arc;

use rayon::prelude::*;

use crate::cell::SampleCache;
use crate::effective::{CellContext, CellSolution, EffectiveCache, Interpretation};
use crate::error::{Error, Result, ResultExt};
use crate::fem::{parallel::sum, Assembler, ConstrainedSystem, ConstraintSet, CsrMatrix, SolverOptions};
use crate::problem::Problem;
use crate::tensor::Vec3;
use crate::twoscale::macro_mesh::{MacroMesh, MicroSite};
use crate::twoscale::micro::{trace_defect, MicroOperators, MicroSpace, MicroState};

/// Discretization choices of the two-scale solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoScaleOptions {
    pub macro_resolution: usize,
    /// One micro problem per macro simplex instead of per quadrature point.
    pub per_element_sites: bool,
}

impl Default for TwoScaleOptions {
    fn default() -> Self {
        TwoScaleOptions {
            macro_resolution: 8,
            per_element_sites: false,
        }
    }
}

/// Macro fields, one micro state per site and the coefficients in use.
#[derive(Clone, Debug)]
pub struct TwoScaleState {
    pub step: usize,
    pub t: f64,
    pub theta: Vec<f64>,
    pub displacement: Vec<f64>,
    pub micro: Vec<MicroState>,
    /// Nodal stored heat of the macro balance at this time.
    pub content: Vec<f64>,
    /// Cell solutions at every macro quadrature point.
    pub effective: Vec<Arc<CellSolution>>,
    pub iterations: usize,
    pub change: f64,
    pub mechanics_residual: f64,
}

/// Macro operators at one time.
struct MacroOperators {
    capacity: CsrMatrix,
    conduction: CsrMatrix,
    /// `∫ φ_i γ_eff : ∇u`; scalar rows, vector columns.
    dissipation: CsrMatrix,
    elastic: ConstrainedSystem,
    expansion: CsrMatrix,
    heat_load: Vec<f64>,
    force_load: Vec<f64>,
}

/// The distributed-microstructure solver for one [`Problem`].
pub struct TwoScaleSolver {
    pub problem: Problem,
    pub options: TwoScaleOptions,
    pub mesh: MacroMesh,
    pub sites: Vec<MicroSite>,
    pub space: MicroSpace,
    pub effective_cache: EffectiveCache,
    micro_cache: SampleCache<MicroOperators>,
    macro_solver: SolverOptions,
    mechanics_constraints: ConstraintSet,
}

impl TwoScaleSolver {
    pub fn new(problem: Problem, options: TwoScaleOptions) -> Result<Self> {
        let dim = problem.dim();
        let mesh = MacroMesh::new(options.macro_resolution, dim)?;
        let sites = mesh.micro_sites(options.per_element_sites);
        let space = MicroSpace::new(&problem.cell)?;
        let q = problem.quantizer(mesh.h());
        let mut mechanics_constraints = ConstraintSet::new(mesh.mesh.n_vertices() * dim);
        for (v, b) in mesh.boundary_vertex.iter().enumerate() {
            if *b {
                for a in 0..dim {
                    mechanics_constraints.pin(v * dim + a, 0.0)?;
                }
            }
        }
        let macro_solver = SolverOptions {
            dense_below: problem.coupling.solver.dense_below.max(1500),
            ..problem.coupling.solver
        };
        Ok(TwoScaleSolver {
            effective_cache: SampleCache::new(q),
            micro_cache: SampleCache::new(q),
            problem,
            options,
            mesh,
            sites,
            space,
            macro_solver,
            mechanics_constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn context(&self) -> CellContext<'_> {
        CellContext {
            domain: &self.problem.cell,
            transformation: &self.problem.transformation,
            material: &self.problem.material,
            sources: &self.problem.sources,
            options: self.problem.coupling.effective(),
        }
    }

    fn uses_inclusion_dissipation(&self) -> bool {
        self.problem.coupling.interpretation == Interpretation::WeakForm
    }

    /// Cell solutions at every macro quadrature point at time `t`.
    pub fn effective_at(&self, t: f64) -> Result<Vec<Arc<CellSolution>>> {
        let asm = Assembler::new(&self.mesh.mesh);
        let ctx = self.context();
        asm.points().par_iter().map(|x| ctx.solve(&self.effective_cache, t, x)).collect()
    }

    fn micro_operators(&self, t: f64) -> Result<Vec<Arc<MicroOperators>>> {
        let ctx = self.context();
        let dt = self.problem.step_size();
        self.sites
            .par_iter()
            .enumerate()
            .map(|(s, site)| {
                self.micro_cache
                    .get_or_compute(t, &site.point, |rt, rx| {
                        let cs = ctx.solve(&self.effective_cache, rt, rx)?;
                        MicroOperators::new(
                            &self.space,
                            &self.problem.cell,
                            &cs.coefficients,
                            dt,
                            &self.problem.coupling.solver,
                        )
                    })
                    .context(|| format!("micro operators at site {s}"))
            })
            .collect()
    }

    fn macro_operators(&self, eff: &[Arc<CellSolution>]) -> Result<MacroOperators> {
        let asm = Assembler::new(&self.mesh.mesh);
        let e = |q: usize| &eff[q].effective;
        let p = &self.problem;
        let latent = p.coupling.latent_sign;
        let elastic_matrix = asm.elasticity(|q| e(q).stiffness)?;
        let force_load = asm.vector_load(|q| e(q).force + e(q).curvature_force);
        Ok(MacroOperators {
            capacity: asm.mass(|q| e(q).capacity)?,
            conduction: asm.diffusion(|q| e(q).conductivity)?,
            dissipation: asm.coupling(|q| e(q).dissipation)?.transpose(),
            elastic: ConstrainedSystem::new(&elastic_matrix, &self.mechanics_constraints, self.macro_solver)?,
            expansion: asm.coupling(|q| e(q).expansion)?,
            heat_load: asm.scalar_load(|q| e(q).heat_source - latent * e(q).latent_source),
            force_load,
        })
    }

    fn solve_mechanics(&self, ops: &MacroOperators, theta: &[f64], guess: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut b = ops.expansion.matvec(theta);
        b.iter_mut().zip(&ops.force_load).for_each(|(bi, f)| *bi += f);
        let (u, _) = ops.elastic.solve(&b, Some(guess)).context(|| "macro mechanics".into())?;
        let au = ops.elastic.full_matrix().matvec(&u);
        let (mut r2, mut b2) = (0.0, 0.0);
        for (i, free) in ops.elastic.reduction.map.iter().enumerate() {
            if *free != usize::MAX {
                r2 += (au[i] - b[i]).powi(2);
                b2 += b[i] * b[i];
            }
        }
        let residual = if b2 > 0.0 { (r2 / b2).sqrt() } else { r2.sqrt() };
        Ok((u, residual))
    }

    /// Stored heat `M_c θ + D u + Σ_s W_s λ_s (Q_s + D_s)`.
    fn content(&self, ops: &MacroOperators, theta: &[f64], u: &[f64], micro: &[MicroState]) -> Vec<f64> {
        let mut p = ops.capacity.matvec(theta);
        let du = ops.dissipation.matvec(u);
        p.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        let with_d = self.uses_inclusion_dissipation();
        for (site, m) in self.sites.iter().zip(micro) {
            let q = m.heat_content + if with_d { m.dissipation } else { 0.0 };
            self.mesh.scatter_site(site, site.weight * q, &mut p);
        }
        p
    }

    fn site_values(&self, theta: &[f64]) -> Vec<f64> {
        self.sites.iter().map(|s| self.mesh.site_value(s, theta)).collect()
    }

    /// Consistent state at `t = 0`: traces of the micro temperatures are
    /// overwritten with the macro values and both displacements are put in
    /// equilibrium.
    pub fn init_state(&self, theta_a0: Vec<f64>, theta_b0: Option<Vec<Vec<f64>>>) -> Result<TwoScaleState> {
        let nv = self.mesh.mesh.n_vertices();
        if theta_a0.len() != nv {
            return Err(Error::Mesh(format!("macro field has {} values for {nv} vertices", theta_a0.len())));
        }
        if let Some(b) = &theta_b0 {
            if b.len() != self.sites.len() || b.iter().any(|f| f.len() != self.space.n_vertices) {
                return Err(Error::Mesh("micro initial fields do not match the sites".into()));
            }
        }
        let t0 = self.problem.time(0);
        let eff = self.effective_at(t0)?;
        let ops = self.macro_operators(&eff)?;
        let micro_ops = self.micro_operators(t0)?;
        let values = self.site_values(&theta_a0);
        let micro: Vec<MicroState> = (0..self.sites.len())
            .into_par_iter()
            .map(|s| {
                let init = match &theta_b0 {
                    Some(b) => b[s].clone(),
                    None => vec![values[s]; self.space.n_vertices],
                };
                micro_ops[s].initial_state(&self.space, values[s], init)
            })
            .collect::<Result<_>>()?;
        let zero = vec![0.0; nv * self.dim()];
        let (u, residual) = self.solve_mechanics(&ops, &theta_a0, &zero)?;
        let content = self.content(&ops, &theta_a0, &u, &micro);
        Ok(TwoScaleState {
            step: 0,
            t: t0,
            theta: theta_a0,
            displacement: u,
            micro,
            content,
            effective: eff,
            iterations: 0,
            change: 0.0,
            mechanics_residual: residual,
        })
    }

    /// Initial state from the problem's initial temperature.
    pub fn initial_state(&self) -> Result<TwoScaleState> {
        let dim = self.dim();
        let theta = self.mesh.mesh.vertices.iter().map(|x| self.problem.initial.eval(x, dim)).collect();
        self.init_state(theta, None)
    }

    /// One implicit-Euler step with the staggered heat / mechanics / micro loop.
    pub fn macro_step(&self, state: &TwoScaleState) -> Result<TwoScaleState> {
        let p = &self.problem;
        let step = state.step + 1;
        if step > p.n_steps() {
            return Err(Error::Mesh(format!("step {step} beyond the final time")));
        }
        let t = p.time(step);
        let dt = p.step_size();
        let eff = self.effective_at(t)?;
        let ops = self.macro_operators(&eff)?;
        let micro_ops = self.micro_operators(t)?;
        let nv = self.mesh.mesh.n_vertices();

        let mut kappa_triplets = Vec::new();
        for (site, m) in self.sites.iter().zip(&micro_ops) {
            let v = self.mesh.mesh.cell(site.element);
            for (i, &vi) in v.iter().enumerate() {
                for (j, &vj) in v.iter().enumerate() {
                    let s = site.weight * m.kappa * site.barycentric[i] * site.barycentric[j];
                    kappa_triplets.push((vi, vj, s));
                }
            }
        }
        let kappa = CsrMatrix::from_triplets(nv, nv, kappa_triplets);
        let heat_matrix = ops.capacity.add_scaled(&kappa, 1.0).scaled(1.0 / dt).add_scaled(&ops.conduction, 1.0);
        let heat = ConstrainedSystem::new(&heat_matrix, &ConstraintSet::new(nv), self.macro_solver)?;
        let column_total: f64 = sum(&heat_matrix.row_sums());

        let mass = Assembler::new(&self.mesh.mesh).mass(|_| 1.0)?;
        let l2 = |a: &[f64], b: &[f64]| -> f64 {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            crate::fem::parallel::dot(&d, &mass.matvec(&d)).max(0.0).sqrt()
        };
        let with_d = self.uses_inclusion_dissipation();
        let decoupled = p.heat_ignores_mechanics();

        let mut theta = state.theta.clone();
        let mut u = state.displacement.clone();
        let mut w: Vec<Vec<f64>> = state.micro.iter().map(|m| m.displacement.clone()).collect();
        let mut d_b: Vec<f64> = state.micro.iter().map(|m| m.dissipation).collect();
        let mut micro_theta: Vec<Vec<f64>> = Vec::new();
        let mut iterations = 0;
        let mut change;
        let mut residual;
        loop {
            iterations += 1;
            let rests: Vec<Vec<f64>> = (0..self.sites.len())
                .into_par_iter()
                .map(|s| micro_ops[s].heat_remainder(&state.micro[s], &w[s]).context(|| format!("micro heat at site {s}")))
                .collect::<Result<_>>()?;
            let du = ops.dissipation.matvec(&u);
            let mut b: Vec<f64> = (0..nv)
                .map(|i| (state.content[i] - du[i]) / dt + ops.heat_load[i])
                .collect();
            for (s, site) in self.sites.iter().enumerate() {
                let q = micro_ops[s].content_of(&rests[s]) + if with_d { d_b[s] } else { 0.0 };
                self.mesh.scatter_site(site, -site.weight * q / dt, &mut b);
            }
            let (mut next, _) = heat.solve(&b, Some(&theta)).context(|| format!("macro heat at step {step}"))?;
            // restore the discrete balance lost to the iterative tolerance
            let defect = sum(&b) - sum(&heat_matrix.matvec(&next));
            let shift = defect / column_total;
            next.iter_mut().for_each(|v| *v += shift);

            let values = self.site_values(&next);
            let micro: Vec<(Vec<f64>, Vec<f64>)> = (0..self.sites.len())
                .into_par_iter()
                .map(|s| {
                    let th = micro_ops[s].temperature(values[s], &rests[s]);
                    let ws = micro_ops[s].displacement(&th).context(|| format!("micro mechanics at site {s}"))?;
                    Ok((th, ws))
                })
                .collect::<Result<_>>()?;
            let (next_u, r) = self.solve_mechanics(&ops, &next, &u)?;
            residual = r;
            let scale = 1.0 + l2(&next, &vec![0.0; nv]);
            change = (l2(&next, &theta) + l2_vec(&mass, &next_u, &u, self.dim())) / scale;
            theta = next;
            u = next_u;
            micro_theta.clear();
            w.clear();
            for (th, ws) in micro {
                micro_theta.push(th);
                w.push(ws);
            }
            d_b = (0..self.sites.len()).map(|s| micro_ops[s].state_dissipation(&w[s])).collect();
            if decoupled || change < p.coupling.fixed_point_tol {
                break;
            }
            if iterations >= p.coupling.fixed_point_max_iter {
                return Err(Error::FixedPoint { iterations, change }).context(|| format!("step {step}, t = {t}"));
            }
        }
        let micro: Vec<MicroState> = micro_theta
            .into_iter()
            .zip(w)
            .enumerate()
            .map(|(s, (th, ws))| micro_ops[s].state(th, ws))
            .collect();
        let content = self.content(&ops, &theta, &u, &micro);
        let tq = self.effective_cache.quantizer.key(t, &Vec3::zeros())[0];
        self.micro_cache.retain(|k| k[0] >= tq);
        Ok(TwoScaleState {
            step,
            t,
            theta,
            displacement: u,
            micro,
            content,
            effective: eff,
            iterations,
            change,
            mechanics_residual: residual,
        })
    }

    /// `∫ c_eff θ² + Σ_s W_s ∫ c_ref θ_B²`.
    pub fn heat_energy(&self, state: &TwoScaleState) -> Result<f64> {
        let asm = Assembler::new(&self.mesh.mesh);
        let m = asm.mass(|q| state.effective[q].effective.capacity)?;
        let macro_part = crate::fem::parallel::dot(&state.theta, &m.matvec(&state.theta));
        let ops = self.micro_operators(state.t)?;
        let micro_part: f64 = self
            .sites
            .iter()
            .zip(&state.micro)
            .zip(&ops)
            .map(|((site, m), o)| site.weight * o.energy(&m.theta))
            .sum();
        Ok(macro_part + micro_part)
    }

    /// Largest interface-trace mismatch over all sites.
    pub fn trace_defect(&self, state: &TwoScaleState) -> f64 {
        let values = self.site_values(&state.theta);
        state
            .micro
            .iter()
            .zip(values)
            .map(|(m, v)| trace_defect(&self.space, m, v))
            .fold(0.0, f64::max)
    }

    /// Largest difference between the temperature at a quadrature point and
    /// at the site standing for it (zero without decimation).
    pub fn decimation_gap(&self, state: &TwoScaleState) -> f64 {
        if !self.options.per_element_sites {
            return 0.0;
        }
        let qp = Assembler::new(&self.mesh.mesh).interpolate(&state.theta);
        self.sites
            .iter()
            .map(|s| {
                let v = self.mesh.site_value(s, &state.theta);
                s.quadrature_points.iter().map(|&q| (qp[q] - v).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

fn l2_vec(mass: &CsrMatrix, a: &[f64], b: &[f64], dim: usize) -> f64 {
    let n = mass.nrows;
    let mut total = 0.0;
    for c in 0..dim {
        let d: Vec<f64> = (0..n).map(|v| a[v * dim + c] - b[v * dim + c]).collect();
        total += crate::fem::parallel::dot(&d, &mass.matvec(&d));
    }
    total.max(0.0).sqrt()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cell::CellDomain;
    use crate::kinematics::{Amplitude, MaterialParams, PhaseMaterial, Sources, Transformation, VectorSource};
    use crate::mesh::build_cell_mesh;
    use crate::problem::{CouplingOptions, InitialTemperature};
    use crate::twoscale::run_simulation;

    pub(crate) fn material(coupled: bool) -> MaterialParams {
        let mut a = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
        let mut b = PhaseMaterial::isotropic(2, 2.0, 2.0, 0.5);
        b.density = 2.0;
        if coupled {
            a.expansion = 0.2;
            a.dissipation = 0.1;
            b.expansion = 0.1;
            b.dissipation = 0.05;
        }
        MaterialParams::new(2, a, b, if coupled { 0.1 } else { 0.0 }, if coupled { 0.5 } else { 0.0 }).unwrap()
    }

    pub(crate) fn problem(tr: Transformation, mat: MaterialParams, initial: InitialTemperature, t_end: f64, dt: f64) -> Problem {
        Problem {
            cell: Arc::new(CellDomain::new(build_cell_mesh(0.25, 8, 2).unwrap())),
            transformation: tr,
            material: mat,
            sources: Sources::zero(),
            initial,
            t_end,
            dt,
            coupling: CouplingOptions::default(),
        }
    }

    fn solver(p: Problem, n: usize) -> TwoScaleSolver {
        TwoScaleSolver::new(
            p,
            TwoScaleOptions {
                macro_resolution: n,
                per_element_sites: false,
            },
        )
        .unwrap()
    }

    #[test]
    fn constant_temperature_is_steady() {
        let p = problem(Transformation::identity(2), material(false), InitialTemperature::constant(1.5), 0.3, 0.1);
        let s = solver(p, 4);
        let out = run_simulation(&s, None).unwrap();
        assert_eq!(out.diagnostics.records.len(), 4);
        for v in &out.final_state.theta {
            assert!((v - 1.5).abs() < 1e-10);
        }
        assert_eq!(s.trace_defect(&out.final_state), 0.0);
        for m in &out.final_state.micro {
            assert!(m.theta.iter().all(|v| (v - 1.5).abs() < 1e-10));
        }
    }

    #[test]
    fn stored_heat_is_conserved_and_energy_decays() {
        let init = InitialTemperature {
            mean: 1.0,
            amplitude: 0.5,
            modes: [1, 1, 0],
        };
        let mut mat = material(true);
        mat.matrix.dissipation = 0.0;
        mat.inclusion.dissipation = 0.0;
        let p = problem(Transformation::identity(2), mat, init, 0.5, 0.05);
        let s = solver(p, 4);
        let out = run_simulation(&s, None).unwrap();
        assert!(out.diagnostics.max_content_drift() < 1e-10, "{}", out.diagnostics.max_content_drift());
        for w in out.diagnostics.records.windows(2) {
            assert!(w[1].heat_energy <= w[0].heat_energy * (1.0 + 1e-12));
            assert!(w[1].mechanics_residual < 1e-10);
        }
    }

    #[test]
    fn temperature_ignores_loads_without_dissipation() {
        let init = InitialTemperature {
            mean: 0.0,
            amplitude: 1.0,
            modes: [1, 0, 0],
        };
        let mut mat = material(true);
        mat.matrix.dissipation = 0.0;
        mat.inclusion.dissipation = 0.0;
        let tr = Transformation::radial_growth(2, 0.25, Amplitude::uniform(0.1), 0.1).unwrap();
        let p = problem(tr, mat, init, 0.2, 0.1);
        let mut q = p.clone();
        q.sources.force = [VectorSource::Constant(Vec3::new(3.0, -1.0, 0.0)), VectorSource::Constant(Vec3::x())];
        let a = run_simulation(&solver(p, 3), None).unwrap();
        let b = run_simulation(&solver(q, 3), None).unwrap();
        assert_eq!(a.history, b.history);
        assert_ne!(a.final_state.displacement, b.final_state.displacement);
    }

    #[test]
    fn coupled_growth_converges_and_keeps_traces() {
        let init = InitialTemperature {
            mean: 1.0,
            amplitude: 0.3,
            modes: [1, 1, 0],
        };
        let tr = Transformation::radial_growth(2, 0.25, Amplitude::uniform(0.1), 0.1).unwrap();
        let p = problem(tr, material(true), init, 0.2, 0.1);
        let s = solver(p, 3);
        let out = run_simulation(&s, None).unwrap();
        for r in &out.diagnostics.records[1..] {
            assert!(r.iterations > 1 && r.change < 1e-8);
            assert!(r.trace_defect < 1e-12);
        }
    }

    #[test]
    fn latent_sink_matches_single_dof_balance() {
        // the latent term is an additive load, so the difference between runs
        // with and without it isolates the sink from transport effects
        let dt = 0.01;
        let step = |latent: f64| {
            let mut mat = material(false);
            mat.inclusion.density = 1.0;
            // fast inclusion conduction: the micro temperature equilibrates within a step
            mat.inclusion.conductivity *= 1e5;
            mat.latent_heat = latent;
            let tr = Transformation::radial_growth(2, 0.25, Amplitude::uniform(0.2), 0.1).unwrap();
            let p = problem(tr, mat, InitialTemperature::constant(1.0), dt, dt);
            let s = solver(p, 2);
            s.macro_step(&s.initial_state().unwrap()).unwrap()
        };
        let (with, without) = (step(0.5), step(0.0));
        let e = &with.effective[0].effective;
        // unit volumetric capacities: the total capacity is the cell measure
        let expected = -dt * e.latent_source / (e.matrix_measure + e.inclusion_measure);
        assert!(expected < 0.0);
        for (a, b) in with.theta.iter().zip(&without.theta) {
            let got = a - b;
            assert!((got - expected).abs() < 0.02 * expected.abs(), "{got} vs {expected}");
        }
    }

    #[test]
    fn implicit_euler_is_first_order_in_time() {
        let init = InitialTemperature {
            mean: 0.0,
            amplitude: 1.0,
            modes: [1, 0, 0],
        };
        let run = |dt: f64| {
            let p = problem(Transformation::identity(2), material(false), init, 0.2, dt);
            let s = solver(p, 4);
            run_simulation(&s, None).unwrap().final_state.theta
        };
        let fine = run(0.2 / 64.0);
        let err = |dt: f64| {
            let th = run(dt);
            th.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.05), err(0.025));
        let order = (e1 / e2).log2();
        assert!((order - 1.0).abs() < 0.2, "observed order {order}");
    }
}
