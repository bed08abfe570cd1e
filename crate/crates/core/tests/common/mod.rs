//! Shared configurations and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermohom::config::{FamilyName, RunConfig};
use thermohom::fem::{Assembler, ConstrainedSystem, ConstraintSet, SolverOptions};
use thermohom::kinematics::{Amplitude, Transformation};
use thermohom::mesh::structured_mesh;
use thermohom::tensor::{Mat3, Tensor4, Vec3};

/// The standard configuration: every built-in default.
pub fn standard() -> RunConfig {
    RunConfig::default()
}

/// Pure diffusion: no motion, no thermo-mechanical coupling, no interface terms.
pub fn decoupled() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.transformation.family = FamilyName::Identity;
    for p in [&mut cfg.matrix, &mut cfg.inclusion] {
        p.expansion = 0.0;
        p.dissipation = 0.0;
    }
    cfg.interface.surface_tension = 0.0;
    cfg.interface.latent_heat = 0.0;
    cfg
}

/// Radial growth whose rate varies across the macroscopic domain.
pub fn sloped_growth() -> Transformation {
    let amplitude = Amplitude {
        rate: 0.1,
        slope: Vec3::new(0.08, -0.05, 0.0),
    };
    Transformation::radial_growth(2, 0.25, amplitude, 0.1).unwrap()
}

/// Uniform random cell/macro points and times in `[0, t_end]`.
pub fn random_samples(n: usize, t_end: f64, seed: u64) -> Vec<(f64, Vec3, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = rng.gen_range(0.0..=t_end);
            let x = Vec3::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), 0.0);
            let y = Vec3::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), 0.0);
            (t, x, y)
        })
        .collect()
}

/// Deformation gradient of `s(t, x, ·)` by central differences.
pub fn fd_gradient(tr: &Transformation, t: f64, x: &Vec3, y: &Vec3, h: f64) -> Mat3 {
    let mut f = Mat3::zeros();
    for b in 0..tr.dim {
        let (mut yp, mut ym) = (*y, *y);
        yp[b] += h;
        ym[b] -= h;
        let d = (tr.map(t, x, &yp).unwrap() - tr.map(t, x, &ym).unwrap()) / (2.0 * h);
        for a in 0..tr.dim {
            f[(a, b)] = d[a];
        }
    }
    for a in tr.dim..3 {
        f[(a, a)] = 1.0;
    }
    f
}

fn l2_error(asm: &Assembler, nodal: &[f64], exact: impl Fn(&Vec3) -> f64) -> f64 {
    let vals = asm.interpolate(nodal);
    let pts = asm.points();
    let w = asm.weights();
    vals.iter()
        .zip(&pts)
        .zip(&w)
        .map(|((v, p), w)| w * (v - exact(p)).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn opts() -> SolverOptions {
    SolverOptions {
        tol: 1e-13,
        ..SolverOptions::default()
    }
}

/// `−Δu = f` on the unit square with `u = sin πx sin πy`, zero Dirichlet data.
pub fn poisson_error(n: usize) -> f64 {
    let (mesh, _) = structured_mesh(n, 2).unwrap();
    let asm = Assembler::new(&mesh);
    let exact = |p: &Vec3| (PI * p[0]).sin() * (PI * p[1]).sin();
    let a = asm.diffusion(|_| Mat3::identity()).unwrap();
    let pts = asm.points();
    let b = asm.scalar_load(|k| 2.0 * PI * PI * exact(&pts[k]));
    let mut cs = ConstraintSet::new(mesh.n_vertices());
    for (v, p) in mesh.vertices.iter().enumerate() {
        if p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0 {
            cs.pin(v, 0.0).unwrap();
        }
    }
    let (u, _) = ConstrainedSystem::new(&a, &cs, opts()).unwrap().solve(&b, None).unwrap();
    l2_error(&asm, &u, exact)
}

/// Isotropic plane elasticity with both displacement components equal to
/// `φ = sin πx sin πy`; the body force follows from
/// `−div σ = −μ Δu − (λ + μ) ∇ div u`.
pub fn elasticity_error(n: usize) -> f64 {
    let (lambda, mu) = (1.5, 1.0);
    let (mesh, _) = structured_mesh(n, 2).unwrap();
    let asm = Assembler::new(&mesh);
    let phi = |p: &Vec3| (PI * p[0]).sin() * (PI * p[1]).sin();
    let cc = |p: &Vec3| (PI * p[0]).cos() * (PI * p[1]).cos();
    let c = Tensor4::isotropic(lambda, mu, 2);
    let a = asm.elasticity(|_| c).unwrap();
    let pts = asm.points();
    let b = asm.vector_load(|k| {
        let p = &pts[k];
        let f = (3.0 * mu + lambda) * PI * PI * phi(p) - (lambda + mu) * PI * PI * cc(p);
        Vec3::new(f, f, 0.0)
    });
    let mut cs = ConstraintSet::new(2 * mesh.n_vertices());
    for (v, p) in mesh.vertices.iter().enumerate() {
        if p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0 {
            cs.pin(2 * v, 0.0).unwrap();
            cs.pin(2 * v + 1, 0.0).unwrap();
        }
    }
    let (u, _) = ConstrainedSystem::new(&a, &cs, opts()).unwrap().solve(&b, None).unwrap();
    let comp = |c: usize| -> Vec<f64> { (0..mesh.n_vertices()).map(|v| u[2 * v + c]).collect() };
    (l2_error(&asm, &comp(0), phi).powi(2) + l2_error(&asm, &comp(1), phi).powi(2)).sqrt()
}

/// Observed orders between consecutive halvings of the mesh size.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
