use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, ResultExt};
use crate::fem::parallel::dot;
use crate::fem::{Assembler, ConstrainedSystem, ConstraintSet, CsrMatrix, SolverOptions};
use crate::kinematics::Phase;
use crate::problem::Problem;
use crate::tensor::{Mat3, Tensor4};

use super::epsilon::EpsilonSolver;

/// Seed of the random test vectors.
pub const STRUCTURE_SEED: u64 = 7_190_305;
/// Number of random vectors per check.
pub const N_PROBES: usize = 100;
/// Relative tolerance on the symmetry of the dissipation operator.
pub const SYMMETRY_TOL: f64 = 1e-8;
const KORN_ITERS: usize = 400;

/// Operator checks at one time sample.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSample {
    pub t: f64,
    /// Relative asymmetry of the assembled elasticity matrix.
    pub elastic_asymmetry: f64,
    /// Smallest `xᵀE x / xᵀx` over random vectors vanishing on the boundary.
    pub elastic_min_rayleigh: f64,
    /// Largest `|⟨B₂f,g⟩ − ⟨B₂g,f⟩| / (⟨B₂f,f⟩⟨B₂g,g⟩)^{1/2}`.
    pub dissipation_asymmetry: f64,
    /// Smallest and largest `⟨B₂f,f⟩ / ‖f‖²`.
    pub dissipation_min_quadratic: f64,
    pub dissipation_max_quadratic: f64,
}

/// Results of [`operator_structure_checks`].
#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub eps: f64,
    pub samples: Vec<StructureSample>,
    /// Largest `|⟨B(t₂)f,g⟩ − ⟨B(t₁)f,g⟩| / ((t₂ − t₁)‖f‖‖g‖)` between
    /// consecutive samples, `B = B₁ + B₂`.
    pub time_quotient: f64,
    /// Weighted Korn constant `max ‖∇u‖²_ε / ‖e(u)‖²_ε` with weight
    /// `eps²` on the inclusions.
    pub korn_constant: f64,
    /// Whether `γ_i / α_i` is the same in both phases, which makes `B₂`
    /// self-adjoint.
    pub proportional_dissipation: bool,
}

impl StructureReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.samples {
            if !(s.elastic_asymmetry < 1e-12) {
                out.push(format!("t = {}: elasticity asymmetry {:e}", s.t, s.elastic_asymmetry));
            }
            if !(s.elastic_min_rayleigh > 0.0) {
                out.push(format!("t = {}: elasticity Rayleigh quotient {:e}", s.t, s.elastic_min_rayleigh));
            }
            if !(s.dissipation_asymmetry < SYMMETRY_TOL) {
                out.push(format!("t = {}: B₂ asymmetry {:e}", s.t, s.dissipation_asymmetry));
            }
            if !(s.dissipation_min_quadratic >= -SYMMETRY_TOL * s.dissipation_max_quadratic.max(1.0)) {
                out.push(format!("t = {}: B₂ quadratic form {:e}", s.t, s.dissipation_min_quadratic));
            }
        }
        if !self.time_quotient.is_finite() {
            out.push("time-difference quotient is not finite".into());
        }
        if !(self.korn_constant.is_finite() && self.korn_constant > 0.0) {
            out.push(format!("Korn constant {}", self.korn_constant));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("eps = {}\n", self.eps);
        for x in &self.samples {
            s.push_str(&format!(
                "t = {:.16e}: E asymmetry {:.16e}, E min Rayleigh {:.16e}, B2 asymmetry {:.16e}, B2 quadratic range [{:.16e}, {:.16e}]\n",
                x.t,
                x.elastic_asymmetry,
                x.elastic_min_rayleigh,
                x.dissipation_asymmetry,
                x.dissipation_min_quadratic,
                x.dissipation_max_quadratic
            ));
        }
        s.push_str(&format!("time-difference quotient {:.16e}\n", self.time_quotient));
        s.push_str(&format!("Korn constant {:.16e}\n", self.korn_constant));
        s.push_str(&format!("proportional dissipation {}\n", self.proportional_dissipation));
        let f = self.failures();
        if f.is_empty() {
            s.push_str("PASS\n");
        } else {
            for line in f {
                s.push_str(&format!("FAIL {line}\n"));
            }
        }
        s
    }
}

fn random_vectors(n: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// `ratio · α_ref` equals `γ_ref` in both phases when `γ_i = ratio · α_i`.
fn dissipation_ratio(p: &Problem) -> Option<f64> {
    let (a, b) = (&p.material.matrix, &p.material.inclusion);
    let ratio = |g: f64, al: f64| if al != 0.0 { Some(g / al) } else if g == 0.0 { None } else { Some(f64::NAN) };
    match (ratio(a.dissipation, a.expansion), ratio(b.dissipation, b.expansion)) {
        (Some(x), Some(y)) => ((x - y).abs() <= 1e-14 * x.abs().max(y.abs())).then_some(x),
        (Some(x), None) | (None, Some(x)) => x.is_finite().then_some(x),
        (None, None) => Some(0.0),
    }
}

/// The quantities entering the checks at one time.
struct Sampled {
    t: f64,
    capacity: CsrMatrix,
    elastic: ConstrainedSystem,
    expansion: CsrMatrix,
    dissipation: CsrMatrix,
}

fn sample(solver: &EpsilonSolver, t: f64) -> Result<Sampled> {
    let f = solver.fields(t)?;
    let asm = Assembler::new(&solver.mesh.mesh);
    let opts = SolverOptions {
        tol: 1e-12,
        ..solver.problem.coupling.solver
    };
    let dim = solver.dim();
    let mut cs = ConstraintSet::new(solver.mesh.mesh.n_vertices() * dim);
    for (v, b) in solver.mesh.boundary_vertex.iter().enumerate() {
        if *b {
            for a in 0..dim {
                cs.pin(v * dim + a, 0.0)?;
            }
        }
    }
    let e = asm.elasticity(|k| f.bulk(k).stiffness)?;
    Ok(Sampled {
        t,
        capacity: asm.mass(|k| f.bulk(k).capacity)?,
        elastic: ConstrainedSystem::new(&e, &cs, opts)?,
        expansion: asm.coupling(|k| f.bulk(k).expansion)?,
        dissipation: asm.coupling(|k| f.bulk(k).dissipation)?,
    })
}

impl Sampled {
    /// `E⁻¹ G_α f` for every probe.
    fn responses(&self, probes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        probes
            .par_iter()
            .map(|f| Ok(self.elastic.solve(&self.expansion.matvec(f), None)?.0))
            .collect()
    }

    /// `⟨B₂ f_i, f_j⟩ = (G_γ f_j)ᵀ E⁻¹ G_α f_i`.
    fn dissipation_form(&self, response: &[f64], g: &[f64]) -> f64 {
        dot(&self.dissipation.matvec(g), response)
    }
}

/// Weighted Korn constant by inverse iteration on the pair of
/// symmetric-gradient and full-gradient forms.
pub fn korn_constant(solver: &EpsilonSolver) -> Result<f64> {
    let m = &solver.mesh.mesh;
    let dim = solver.dim();
    let eps2 = solver.eps * solver.eps;
    let weight = |k: usize, nq: usize| if m.phases[k / nq] == Phase::B { eps2 } else { 1.0 };
    let asm = Assembler::new(m);
    let nq = asm.n_qp();
    let sym_form = asm.elasticity(|k| Tensor4::isotropic(0.0, 0.5, dim).scale(weight(k, nq)))?;
    let lap = asm.diffusion(|k| Mat3::identity() * weight(k, nq))?;
    let mut triplets = Vec::with_capacity(lap.nnz() * dim);
    for i in 0..lap.nrows {
        let (cols, vals) = lap.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            for a in 0..dim {
                triplets.push((i * dim + a, j * dim + a, v));
            }
        }
    }
    let grad_form = CsrMatrix::from_triplets(lap.nrows * dim, lap.ncols * dim, triplets);
    let mut cs = ConstraintSet::new(m.n_vertices() * dim);
    for (v, b) in solver.mesh.boundary_vertex.iter().enumerate() {
        if *b {
            for a in 0..dim {
                cs.pin(v * dim + a, 0.0)?;
            }
        }
    }
    let sys = ConstrainedSystem::new(&sym_form, &cs, solver.problem.coupling.solver)?;
    let mut x = random_vectors(1, m.n_vertices() * dim, STRUCTURE_SEED ^ 0x4b).remove(0);
    let mut lambda = f64::INFINITY;
    for _ in 0..KORN_ITERS {
        let (y, _) = sys.solve(&grad_form.matvec(&x), Some(&x)).context(|| "Korn inverse iteration".into())?;
        let n = dot(&y, &grad_form.matvec(&y)).sqrt();
        if n == 0.0 {
            break;
        }
        x = y.iter().map(|v| v / n).collect();
        let next = dot(&x, &sym_form.matvec(&x));
        let settled = (next - lambda).abs() <= 1e-9 * next;
        lambda = next;
        if settled {
            break;
        }
    }
    Ok(1.0 / lambda)
}

/// Discrete checks of the elasticity and dissipation operators of the
/// ε-problem at the given times.
pub fn operator_structure_checks(problem: &Problem, eps: f64, times: &[f64]) -> Result<StructureReport> {
    let solver = EpsilonSolver::new(problem.clone(), eps)?;
    let nv = solver.mesh.mesh.n_vertices();
    let dim = solver.dim();
    let temperature_probes = random_vectors(N_PROBES, nv, STRUCTURE_SEED);
    let mut displacement_probes = random_vectors(N_PROBES, nv * dim, STRUCTURE_SEED + 1);
    for x in &mut displacement_probes {
        for (v, b) in solver.mesh.boundary_vertex.iter().enumerate() {
            if *b {
                for a in 0..dim {
                    x[v * dim + a] = 0.0;
                }
            }
        }
    }
    let unit_mass = Assembler::new(&solver.mesh.mesh).mass(|_| 1.0)?;
    let h_norm2: Vec<f64> = temperature_probes.iter().map(|f| dot(f, &unit_mass.matvec(f))).collect();

    let mut samples = Vec::with_capacity(times.len());
    // bilinear forms ⟨B f_i, f_{i+1}⟩ of a few pairs, per time
    let pairs = 5.min(N_PROBES - 1);
    let mut forms: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    for &t in times {
        let s = sample(&solver, t).context(|| format!("operators at t = {t}"))?;
        let e = s.elastic.full_matrix();
        let elastic_min_rayleigh = displacement_probes
            .iter()
            .map(|x| dot(x, &e.matvec(x)) / dot(x, x))
            .fold(f64::INFINITY, f64::min);
        let responses = s.responses(&temperature_probes)?;
        let q: Vec<f64> = (0..N_PROBES)
            .map(|i| s.dissipation_form(&responses[i], &temperature_probes[i]))
            .collect();
        let mut asym = 0.0_f64;
        for i in 0..N_PROBES {
            let j = (i + 1) % N_PROBES;
            let fg = s.dissipation_form(&responses[i], &temperature_probes[j]);
            let gf = s.dissipation_form(&responses[j], &temperature_probes[i]);
            let scale = (q[i].abs() * q[j].abs()).sqrt();
            let d = (fg - gf).abs();
            asym = asym.max(if scale > 0.0 { d / scale } else { d });
        }
        let ratios: Vec<f64> = q.iter().zip(&h_norm2).map(|(a, b)| a / b).collect();
        forms.push(
            (0..pairs)
                .map(|i| {
                    let g = &temperature_probes[i + 1];
                    dot(g, &s.capacity.matvec(&temperature_probes[i])) + s.dissipation_form(&responses[i], g)
                })
                .collect(),
        );
        samples.push(StructureSample {
            t: s.t,
            elastic_asymmetry: e.symmetry_defect(),
            elastic_min_rayleigh,
            dissipation_asymmetry: asym,
            dissipation_min_quadratic: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            dissipation_max_quadratic: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let mut time_quotient = 0.0_f64;
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        if dt <= 0.0 {
            continue;
        }
        for i in 0..pairs {
            let scale = (h_norm2[i] * h_norm2[i + 1]).sqrt();
            time_quotient = time_quotient.max((forms[k][i] - forms[k - 1][i]).abs() / (dt * scale));
        }
    }
    Ok(StructureReport {
        eps: solver.eps,
        samples,
        time_quotient,
        korn_constant: korn_constant(&solver)?,
        proportional_dissipation: dissipation_ratio(problem).is_some(),
    })
}
