use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::effective::coefficients::EffectiveCoefficients;
use crate::tensor::{block_eigenvalues, Vec3};

/// Seed of the fixed pseudo-random probe directions.
pub const PROBE_SEED: u64 = 20_240_611;

/// Canonical basis plus 20 seeded random unit vectors in `dim` dimensions.
pub fn probe_vectors(dim: usize) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = (0..dim).map(|a| Vec3::ith(a, 1.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    while out.len() < dim + 20 {
        let mut v = Vec3::zeros();
        for a in 0..dim {
            v[a] = rng.gen_range(-1.0..1.0);
        }
        let n = v.norm();
        if n > 1e-3 {
            out.push(v / n);
        }
    }
    out
}

/// Structural checks on one set of effective coefficients.
#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub stiffness_minor_defect: f64,
    pub stiffness_major_defect: f64,
    pub stiffness_min_eigenvalue: f64,
    pub conductivity_asymmetry: f64,
    pub conductivity_min_eigenvalue: f64,
    /// Largest `qᵀK q − qᵀ(∫K_ref)q` over the probes (non-positive when the bound holds).
    pub bound_excess: f64,
    pub capacity: f64,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_invariants(eff: &EffectiveCoefficients, tol: f64) -> InvariantReport {
    let dim = eff.dim;
    let k = &eff.conductivity;
    let mut asym = 0.0_f64;
    for a in 0..dim {
        for b in 0..dim {
            asym = asym.max((k[(a, b)] - k[(b, a)]).abs());
        }
    }
    let kscale = k.amax().max(f64::MIN_POSITIVE);
    let mut rep = InvariantReport {
        stiffness_minor_defect: eff.stiffness.minor_symmetry_defect(dim),
        stiffness_major_defect: eff.stiffness.major_symmetry_defect(dim),
        stiffness_min_eigenvalue: eff.stiffness.min_mandel_eigenvalue(dim),
        conductivity_asymmetry: asym / kscale,
        conductivity_min_eigenvalue: block_eigenvalues(k, dim)[0],
        bound_excess: f64::NEG_INFINITY,
        capacity: eff.capacity,
        violations: Vec::new(),
    };
    for q in probe_vectors(dim) {
        let lhs = q.dot(&(k * q));
        let rhs = q.dot(&(eff.conductivity_bound * q));
        rep.bound_excess = rep.bound_excess.max(lhs - rhs);
    }
    if rep.stiffness_minor_defect > tol || rep.stiffness_major_defect > tol {
        rep.violations.push(format!(
            "effective stiffness symmetry defects {:.3e} (minor), {:.3e} (major)",
            rep.stiffness_minor_defect, rep.stiffness_major_defect
        ));
    }
    if !(rep.stiffness_min_eigenvalue > 0.0) {
        rep.violations.push(format!("effective stiffness not positive definite ({:.3e})", rep.stiffness_min_eigenvalue));
    }
    if rep.conductivity_asymmetry > tol {
        rep.violations.push(format!("effective conductivity asymmetric ({:.3e})", rep.conductivity_asymmetry));
    }
    if !(rep.conductivity_min_eigenvalue > 0.0) {
        rep.violations.push(format!(
            "effective conductivity not positive definite ({:.3e})",
            rep.conductivity_min_eigenvalue
        ));
    }
    if rep.bound_excess > tol {
        rep.violations.push(format!("effective conductivity exceeds the arithmetic bound by {:.3e}", rep.bound_excess));
    }
    if !(rep.capacity > 0.0) {
        rep.violations.push(format!("effective capacity {:.3e} is not positive", rep.capacity));
    }
    rep
}
