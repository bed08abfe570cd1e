use rayon::prelude::*;

use crate::error::{Error, Result, ResultExt};
use crate::fem::Assembler;
use crate::kinematics::Phase;
use crate::problem::Problem;
use crate::twoscale::{MacroMesh, TwoScaleOptions, TwoScaleSolver, TwoScaleState};

use super::epsilon::{solve_epsilon_problem, EpsilonSolution};

/// Space-time `L²` distances between one ε run and the homogenized solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareRow {
    pub eps: f64,
    /// `‖Θ^ε − I θ_A‖` over the matrix phase, `I` the nodal interpolant on the ε-mesh.
    pub matrix_error: f64,
    /// `‖Θ^ε − θ_B‖` over the inclusions, `θ_B` from the nearest micro site.
    pub inclusion_error: f64,
    /// `‖θ_A − I θ_A‖` over the matrix phase; part of `matrix_error` not
    /// attributable to the limit.
    pub interpolation_error: f64,
    pub matrix_norm: f64,
    pub inclusion_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    pub const HEADER: &'static str =
        "eps,matrix_error,inclusion_error,interpolation_error,matrix_norm,inclusion_norm";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.eps, r.matrix_error, r.inclusion_error, r.interpolation_error, r.matrix_norm, r.inclusion_norm
            ));
        }
        s
    }

    /// True when the matrix-phase error decreases strictly with `eps`.
    pub fn matrix_error_decreasing(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        rows.windows(2).all(|w| w[1].matrix_error < w[0].matrix_error)
    }
}

/// Where every quadrature point of an ε-mesh takes its homogenized value.
struct Probe<'a> {
    sol: &'a EpsilonSolution,
    weights: Vec<f64>,
    phases: Vec<Phase>,
    /// Macro element and barycentric coordinates of every matrix point.
    matrix_points: Vec<(usize, [f64; 4])>,
    /// Macro element and barycentric coordinates of every ε-vertex.
    vertex_points: Vec<(usize, [f64; 4])>,
    /// Site and inclusion-mesh vertex weights of every inclusion point.
    inclusion_points: Vec<(usize, [(usize, f64); 4])>,
    sums: [f64; 5],
}

fn eval(mesh: &MacroMesh, nodal: &[f64], at: &(usize, [f64; 4])) -> f64 {
    mesh.mesh.cell(at.0).iter().zip(&at.1).map(|(&v, l)| nodal[v] * l).sum()
}

impl<'a> Probe<'a> {
    fn new(sol: &'a EpsilonSolution, solver: &TwoScaleSolver) -> Self {
        let em = &sol.mesh;
        let m = &em.mesh;
        let dim = m.dim;
        let asm = Assembler::new(m);
        let nq = asm.n_qp();
        let points = asm.points();
        let cell = &solver.problem.cell;
        let mut local_inclusion = vec![usize::MAX; cell.cell.mesh.n_cells()];
        for (l, &c) in cell.inclusion.parent_cell.iter().enumerate() {
            local_inclusion[c] = l;
        }
        let n_tiles = em.tile_corner.len();
        let nearest: Vec<usize> = (0..n_tiles)
            .map(|tile| {
                let mut x = em.tile_corner[tile];
                for a in 0..dim {
                    x[a] += 0.5 * em.eps;
                }
                let mut best = (f64::INFINITY, 0);
                for (s, site) in solver.sites.iter().enumerate() {
                    let d = (site.point - x).norm();
                    if d < best.0 {
                        best = (d, s);
                    }
                }
                best.1
            })
            .collect();
        let mut matrix_points = Vec::new();
        let mut inclusion_points = Vec::new();
        let mut phases = Vec::with_capacity(points.len());
        for (k, x) in points.iter().enumerate() {
            let e = k / nq;
            let phase = m.phases[e];
            phases.push(phase);
            match phase {
                Phase::A => matrix_points.push(solver.mesh.locate(x)),
                Phase::B => {
                    let (tile, c) = em.element_origin[e];
                    let lv = cell.inclusion.mesh.cell(local_inclusion[c]);
                    let lam = &asm.quadrature.points[k % nq];
                    let mut w = [(0, 0.0); 4];
                    for i in 0..=dim {
                        w[i] = (lv[i], lam[i]);
                    }
                    inclusion_points.push((nearest[tile], w));
                }
            }
        }
        let vertex_points = m.vertices.iter().map(|x| solver.mesh.locate(x)).collect();
        Probe {
            sol,
            weights: asm.weights(),
            phases,
            matrix_points,
            vertex_points,
            inclusion_points,
            sums: [0.0; 5],
        }
    }

    /// Adds `dt` times the squared distances at time level `n`.
    fn accumulate(&mut self, n: usize, dt: f64, solver: &TwoScaleSolver, state: &TwoScaleState) {
        let macro_mesh = &solver.mesh;
        let asm = Assembler::new(&self.sol.mesh.mesh);
        let theta = asm.interpolate(&self.sol.theta[n]);
        let nodal: Vec<f64> = self.vertex_points.iter().map(|p| eval(macro_mesh, &state.theta, p)).collect();
        let interpolant = asm.interpolate(&nodal);
        let (mut ia, mut ib) = (0, 0);
        let mut s = [0.0; 5];
        for (k, phase) in self.phases.iter().enumerate() {
            let w = self.weights[k];
            match phase {
                Phase::A => {
                    let exact = eval(macro_mesh, &state.theta, &self.matrix_points[ia]);
                    ia += 1;
                    s[0] += w * (theta[k] - interpolant[k]).powi(2);
                    s[2] += w * (exact - interpolant[k]).powi(2);
                    s[3] += w * theta[k] * theta[k];
                }
                Phase::B => {
                    let (site, lw) = &self.inclusion_points[ib];
                    ib += 1;
                    let micro = &state.micro[*site].theta;
                    let v: f64 = lw.iter().map(|(i, l)| if *l != 0.0 { micro[*i] * l } else { 0.0 }).sum();
                    s[1] += w * (theta[k] - v).powi(2);
                    s[4] += w * theta[k] * theta[k];
                }
            }
        }
        for (acc, v) in self.sums.iter_mut().zip(s) {
            *acc += dt * v;
        }
    }

    fn row(&self) -> CompareRow {
        let r = self.sums.map(f64::sqrt);
        CompareRow {
            eps: self.sol.eps,
            matrix_error: r[0],
            inclusion_error: r[1],
            interpolation_error: r[2],
            matrix_norm: r[3],
            inclusion_norm: r[4],
        }
    }
}

/// Runs the homogenized problem once and the ε-problem for every entry of
/// `eps_list`, and measures their distance in `L²(S × Ω)` per phase.
pub fn two_scale_compare(problem: &Problem, eps_list: &[f64], options: TwoScaleOptions) -> Result<CompareTable> {
    let solutions: Vec<EpsilonSolution> =
        eps_list.par_iter().map(|&eps| solve_epsilon_problem(problem, eps)).collect::<Result<_>>()?;
    compare_solutions(problem, &solutions, options)
}

/// Comparison against precomputed ε runs of the same problem.
pub fn compare_solutions(problem: &Problem, solutions: &[EpsilonSolution], options: TwoScaleOptions) -> Result<CompareTable> {
    let solver = TwoScaleSolver::new(problem.clone(), options)?;
    let n = problem.n_steps();
    for sol in solutions {
        if sol.times.len() != n + 1 || sol.problem.t_end != problem.t_end || sol.problem.dt != problem.dt {
            return Err(Error::Mesh(format!("ε = {} run does not match the time grid of the comparison", sol.eps)));
        }
    }
    let mut probes: Vec<Probe> = solutions.par_iter().map(|s| Probe::new(s, &solver)).collect();
    let mut state = solver.initial_state()?;
    for step in 1..=n {
        let next = solver.macro_step(&state).context(|| format!("homogenized step {step}"))?;
        let dt = next.t - state.t;
        probes.par_iter_mut().for_each(|p| p.accumulate(step, dt, &solver, &next));
        state = next;
    }
    Ok(CompareTable {
        rows: probes.iter().map(Probe::row).collect(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cell::CellDomain;
    use crate::kinematics::{MaterialParams, PhaseMaterial, Sources, Transformation};
    use crate::mesh::build_cell_mesh;
    use crate::problem::{CouplingOptions, InitialTemperature};

    fn problem(initial: InitialTemperature) -> Problem {
        let m = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
        Problem {
            cell: Arc::new(CellDomain::new(build_cell_mesh(0.25, 8, 2).unwrap())),
            transformation: Transformation::identity(2),
            material: MaterialParams::new(2, m.clone(), m, 0.0, 0.0).unwrap(),
            sources: Sources::zero(),
            initial,
            t_end: 0.1,
            dt: 0.05,
            coupling: CouplingOptions::default(),
        }
    }

    #[test]
    fn constant_solution_has_no_error() {
        let opts = TwoScaleOptions {
            macro_resolution: 4,
            per_element_sites: false,
        };
        let t = two_scale_compare(&problem(InitialTemperature::constant(1.25)), &[0.5, 0.25], opts).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            assert!(r.matrix_error < 1e-10 && r.inclusion_error < 1e-10 && r.interpolation_error < 1e-10, "{r:?}");
            assert!(r.matrix_norm > 0.0 && r.inclusion_norm > 0.0);
        }
        assert_eq!(t.to_csv().lines().count(), 3);
    }

    #[test]
    fn single_eps_gives_single_row() {
        let opts = TwoScaleOptions {
            macro_resolution: 4,
            per_element_sites: true,
        };
        let init = InitialTemperature {
            mean: 1.0,
            amplitude: 0.5,
            modes: [1, 0, 0],
        };
        let t = two_scale_compare(&problem(init), &[0.5], opts).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].matrix_error > 0.0 && t.rows[0].matrix_error.is_finite());
        assert!(t.matrix_error_decreasing());
    }
}
