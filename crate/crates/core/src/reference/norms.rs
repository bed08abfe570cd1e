use crate::error::Result;
use crate::fem::{parallel::dot, pcg, Assembler, CsrMatrix, SolverOptions};
use crate::kinematics::Phase;
use crate::mesh::EpsilonMesh;
use crate::tensor::Mat3;

use super::epsilon::{weighted_norm, EpsilonSolution};

/// The six solution norms bounded independently of `eps`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormBundle {
    /// `max_t ‖Θ‖_{L²(Ω)}`.
    pub theta: f64,
    /// `‖∇Θ‖_{L²(S×Ω_A)}`.
    pub grad_theta_matrix: f64,
    /// `eps ‖∇Θ‖_{L²(S×Ω_B)}`.
    pub grad_theta_inclusion: f64,
    /// `max_t ‖U‖_{L²(Ω)}`.
    pub displacement: f64,
    /// `max_t ‖∇U‖_{L²(Ω_A)}`.
    pub grad_displacement_matrix: f64,
    /// `eps max_t ‖∇U‖_{L²(Ω_B)}`.
    pub grad_displacement_inclusion: f64,
}

impl NormBundle {
    pub const NAMES: [&'static str; 6] = [
        "theta_linf_l2",
        "grad_theta_matrix_l2_l2",
        "eps_grad_theta_inclusion_l2_l2",
        "u_linf_l2",
        "grad_u_matrix_linf_l2",
        "eps_grad_u_inclusion_linf_l2",
    ];

    pub fn entries(&self) -> [f64; 6] {
        [
            self.theta,
            self.grad_theta_matrix,
            self.grad_theta_inclusion,
            self.displacement,
            self.grad_displacement_matrix,
            self.grad_displacement_inclusion,
        ]
    }
}

/// Squared `L²` norms of the gradient of a nodal field over each phase.
pub fn phase_gradient_norms(mesh: &EpsilonMesh, nodal: &[f64], block: usize) -> [f64; 2] {
    let m = &mesh.mesh;
    let asm = Assembler::new(m);
    let mut out = [0.0; 2];
    for e in 0..m.n_cells() {
        let g2 = if block == 1 {
            asm.scalar_gradient(e, nodal).norm_squared()
        } else {
            asm.vector_gradient(e, nodal).norm_squared()
        };
        out[m.phases[e] as usize] += asm.geometry(e).volume * g2;
    }
    out
}

/// Norm bundle of a complete run; time integrals use the implicit-Euler
/// right-endpoint rule.
pub fn apriori_norm_bundle(sol: &EpsilonSolution) -> Result<NormBundle> {
    let mesh = &sol.mesh;
    let dim = mesh.dim();
    let eps = sol.eps;
    let mass = Assembler::new(&mesh.mesh).mass(|_| 1.0)?;
    let mut b = NormBundle::default();
    let (mut gta, mut gtb) = (0.0, 0.0);
    for (n, (theta, u)) in sol.theta.iter().zip(&sol.displacement).enumerate() {
        b.theta = b.theta.max(weighted_norm(&mass, theta, 1));
        b.displacement = b.displacement.max(weighted_norm(&mass, u, dim));
        let gu = phase_gradient_norms(mesh, u, dim);
        b.grad_displacement_matrix = b.grad_displacement_matrix.max(gu[Phase::A as usize].sqrt());
        b.grad_displacement_inclusion = b.grad_displacement_inclusion.max(eps * gu[Phase::B as usize].sqrt());
        if n > 0 {
            let dt = sol.times[n] - sol.times[n - 1];
            let gt = phase_gradient_norms(mesh, theta, 1);
            gta += dt * gt[Phase::A as usize];
            gtb += dt * gt[Phase::B as usize];
        }
    }
    b.grad_theta_matrix = gta.sqrt();
    b.grad_theta_inclusion = eps * gtb.sqrt();
    Ok(b)
}

/// `∫_Γ u²` of a P1 field over the interface facets of the ε-mesh.
pub fn interface_l2_squared(mesh: &EpsilonMesh, nodal: &[f64]) -> f64 {
    let dim = mesh.dim();
    let k = (dim * (dim + 1)) as f64;
    mesh.interface
        .iter()
        .map(|f| {
            let v = &f.vertices[..dim];
            let sq: f64 = v.iter().map(|&i| nodal[i] * nodal[i]).sum();
            let s: f64 = v.iter().map(|&i| nodal[i]).sum();
            f.measure * (sq + s * s) / k
        })
        .sum()
}

/// Both sides of the scaled trace inequality
/// `eps ‖Θ‖²_Γ ≤ C (‖Θ‖²_Ω + eps² ‖∇Θ‖²_Ω)` for one field.
pub fn trace_terms(mesh: &EpsilonMesh, eps: f64, theta: &[f64]) -> Result<(f64, f64)> {
    let mass = Assembler::new(&mesh.mesh).mass(|_| 1.0)?;
    let g = phase_gradient_norms(mesh, theta, 1);
    let lhs = eps * interface_l2_squared(mesh, theta);
    let rhs = dot(theta, &mass.matvec(theta)) + eps * eps * (g[0] + g[1]);
    Ok((lhs, rhs))
}

/// Largest trace ratio over the time levels of a run.
pub fn trace_ratio(sol: &EpsilonSolution) -> Result<f64> {
    let mut worst = 0.0_f64;
    for theta in &sol.theta {
        let (lhs, rhs) = trace_terms(&sol.mesh, sol.eps, theta)?;
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    Ok(worst)
}

/// Smallest constant of the scaled trace inequality valid for every P1
/// field on the ε-mesh: the largest `λ` of
/// `eps M_Γ x = λ (M + eps² K) x`, by power iteration.
pub fn trace_constant(mesh: &EpsilonMesh, eps: f64) -> Result<f64> {
    let m = &mesh.mesh;
    let n = m.n_vertices();
    let dim = mesh.dim();
    let asm = Assembler::new(m);
    let volume = asm.mass(|_| 1.0)?.add_scaled(&asm.diffusion(|_| Mat3::identity())?, eps * eps);
    let k = (dim * (dim + 1)) as f64;
    let mut triplets = Vec::with_capacity(mesh.interface.len() * dim * dim);
    for f in &mesh.interface {
        let v = &f.vertices[..dim];
        for &i in v {
            for &j in v {
                let w = if i == j { 2.0 } else { 1.0 };
                triplets.push((i, j, eps * f.measure * w / k));
            }
        }
    }
    let surface = CsrMatrix::from_triplets(n, n, triplets);
    let opts = SolverOptions {
        tol: 1e-12,
        ..SolverOptions::default()
    };
    // deterministic start with a component along every interface mode
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let (y, _) = pcg(&volume, &surface.matvec(&x), Some(&x), &opts)?;
        let scale = dot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / scale).collect();
        let next = dot(&x, &surface.matvec(&x)) / dot(&x, &volume.matvec(&x));
        let done = (next - lambda).abs() <= 1e-10 * next;
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::cell::CellDomain;
    use crate::kinematics::{MaterialParams, PhaseMaterial, Sources, Transformation};
    use crate::mesh::{build_cell_mesh, build_epsilon_mesh};
    use crate::problem::{CouplingOptions, InitialTemperature, Problem};

    fn solution(theta: Vec<Vec<f64>>, u: Vec<Vec<f64>>, eps: f64) -> EpsilonSolution {
        let cell = build_cell_mesh(0.25, 8, 2).unwrap();
        let mesh = Arc::new(build_epsilon_mesh(&cell, eps).unwrap());
        let m = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
        let n = theta.len();
        EpsilonSolution {
            eps,
            problem: Problem {
                cell: Arc::new(CellDomain::new(cell)),
                transformation: Transformation::identity(2),
                material: MaterialParams::new(2, m.clone(), m, 0.0, 0.0).unwrap(),
                sources: Sources::zero(),
                initial: InitialTemperature::constant(1.0),
                t_end: 1.0,
                dt: 1.0 / (n - 1).max(1) as f64,
                coupling: CouplingOptions::default(),
            },
            times: (0..n).map(|i| i as f64 / (n - 1).max(1) as f64).collect(),
            mesh,
            theta,
            displacement: u,
            records: Vec::new(),
        }
    }

    fn sizes(eps: f64) -> (usize, usize) {
        let cell = build_cell_mesh(0.25, 8, 2).unwrap();
        let nv = build_epsilon_mesh(&cell, eps).unwrap().mesh.n_vertices();
        (nv, 2 * nv)
    }

    #[test]
    fn constant_and_zero_fields() {
        let (nv, nu) = sizes(0.5);
        let one = solution(vec![vec![1.0; nv]; 3], vec![vec![0.0; nu]; 3], 0.5);
        let b = apriori_norm_bundle(&one).unwrap().entries();
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!(b[1..].iter().all(|v| v.abs() < 1e-12));
        let zero = solution(vec![vec![0.0; nv]; 3], vec![vec![0.0; nu]; 3], 0.5);
        assert_eq!(apriori_norm_bundle(&zero).unwrap().entries(), [0.0; 6]);
    }

    /// `∫_T u² = |T| (Σ u_i² + (Σ u_i)²) / ((d+1)(d+2))` for P1 `u`, and
    /// the gradient from the vertex-coordinate system.
    #[test]
    fn random_field_matches_closed_form_moments() {
        let (nv, nu) = sizes(0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let th: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..nu).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = solution(vec![th.clone()], vec![u.clone()], 0.25);
        let b = apriori_norm_bundle(&sol).unwrap();
        let m = &sol.mesh.mesh;
        let (mut l2, mut ul2, mut gu) = (0.0, 0.0, [0.0; 2]);
        for c in 0..m.n_cells() {
            let v = m.cell(c);
            let vol = m.signed_volume(c).abs();
            let moment = |f: &dyn Fn(usize) -> f64| {
                let sq: f64 = v.iter().map(|&i| f(i) * f(i)).sum();
                let s: f64 = v.iter().map(|&i| f(i)).sum();
                vol * (sq + s * s) / 12.0
            };
            l2 += moment(&|i| th[i]);
            ul2 += moment(&|i| u[2 * i]) + moment(&|i| u[2 * i + 1]);
            // gradient of each component from two edge differences
            let p = |i: usize| m.vertices[v[i]];
            let e = nalgebra::Matrix2::new(p(1)[0] - p(0)[0], p(1)[1] - p(0)[1], p(2)[0] - p(0)[0], p(2)[1] - p(0)[1]);
            for a in 0..2 {
                let d = nalgebra::Vector2::new(u[2 * v[1] + a] - u[2 * v[0] + a], u[2 * v[2] + a] - u[2 * v[0] + a]);
                let g = e.try_inverse().unwrap() * d;
                gu[m.phases[c] as usize] += vol * g.norm_squared();
            }
        }
        assert!((b.theta - l2.sqrt()).abs() < 1e-12);
        assert!((b.displacement - ul2.sqrt()).abs() < 1e-12);
        assert!((b.grad_displacement_matrix - gu[0].sqrt()).abs() < 1e-12 * gu[0].sqrt());
        assert!((b.grad_displacement_inclusion - 0.25 * gu[1].sqrt()).abs() < 1e-12 * gu[1].sqrt());
    }

    #[test]
    fn interface_integral_of_constant_is_interface_measure() {
        let (nv, nu) = sizes(0.25);
        let sol = solution(vec![vec![1.0; nv]], vec![vec![0.0; nu]], 0.25);
        let total: f64 = sol.mesh.interface.iter().map(|f| f.measure).sum();
        assert!((interface_l2_squared(&sol.mesh, &sol.theta[0]) - total).abs() < 1e-12);
        // ε|Γ^ε| equals the cell interface measure for every ε
        let cell_gamma: f64 = sol.problem.cell.cell.interface.iter().map(|f| f.measure).sum();
        assert!((trace_ratio(&sol).unwrap() - cell_gamma).abs() < 1e-12);
    }

    #[test]
    fn trace_constant_bounds_every_field() {
        let (nv, nu) = sizes(0.5);
        let sol = solution(vec![vec![1.0; nv]], vec![vec![0.0; nu]], 0.5);
        let c = trace_constant(&sol.mesh, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let th: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (lhs, rhs) = trace_terms(&sol.mesh, 0.5, &th).unwrap();
            assert!(lhs <= c * rhs * (1.0 + 1e-8), "{} > {c}", lhs / rhs);
        }
        assert!(c >= trace_ratio(&sol).unwrap());
    }
}
