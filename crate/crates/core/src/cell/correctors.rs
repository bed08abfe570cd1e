use crate::cell::domain::{CellCoefficients, CellDomain};
use crate::error::{Result, ResultExt};
use crate::fem::{ConstrainedSystem, Layout, SolveStats, SolverOptions};
use crate::tensor::{symmetric_pairs, unit_strain, Mat3, Vec3};

/// Periodic zero-mean cell correctors on the matrix phase, as nodal values
/// on [`CellDomain::matrix`].
#[derive(Clone, Debug)]
pub struct Correctors {
    pub dim: usize,
    /// Strain pairs `(j, k)`, `j ≤ k`, in the order of [`Correctors::elastic`].
    pub pairs: Vec<(usize, usize)>,
    /// Displacement response to the unit symmetric strain of each pair.
    pub elastic: Vec<Vec<f64>>,
    /// Displacement response to a unit temperature.
    pub thermal_stress: Vec<f64>,
    /// Temperature response to each unit gradient.
    pub thermal: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl Correctors {
    /// Elastic corrector for the (unordered) pair `(j, k)`.
    pub fn elastic_pair(&self, j: usize, k: usize) -> &[f64] {
        let key = if j <= k { (j, k) } else { (k, j) };
        let i = self.pairs.iter().position(|&p| p == key).expect("pair within dimension");
        &self.elastic[i]
    }
}

/// Solves the mechanical correctors: for each symmetric unit strain `S`,
/// `∫ C(e(τ) + S) : e(v) = 0`; and the thermal-stress corrector,
/// `∫ C e(τ) : e(v) = ∫ α : ∇v`, for all periodic zero-mean `v`.
pub fn solve_elastic_correctors(
    domain: &CellDomain,
    coeffs: &CellCoefficients,
    opts: &SolverOptions,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, usize)> {
    let dim = domain.dim();
    let pd = &domain.matrix;
    let c = &coeffs.matrix;
    let asm = pd.assembler();
    let a = asm.elasticity(|q| c[q].stiffness)?;
    let cs = domain.matrix_constraints(Layout::Vector)?;
    let sys = ConstrainedSystem::new(&a, &cs, *opts)?;
    let mut iterations = 0;
    let mut elastic = Vec::new();
    for (j, k) in symmetric_pairs(dim) {
        let s = unit_strain(j, k);
        let b: Vec<f64> = asm.stress_load(|q| -c[q].stiffness.contract(&s));
        let (x, st): (Vec<f64>, SolveStats) = sys.solve(&b, None).context(|| format!("elastic corrector ({j},{k})"))?;
        iterations += st.iterations;
        elastic.push(x);
    }
    let b = asm.stress_load(|q| c[q].expansion);
    let (thermal_stress, st) = sys.solve(&b, None).context(|| "thermal-stress corrector".into())?;
    iterations += st.iterations;
    Ok((elastic, thermal_stress, iterations))
}

/// Solves `∫ K(∇τ_j + e_j) · ∇v = 0` for all periodic zero-mean `v`, `j < dim`.
pub fn solve_thermal_correctors(
    domain: &CellDomain,
    coeffs: &CellCoefficients,
    opts: &SolverOptions,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let dim = domain.dim();
    let c = &coeffs.matrix;
    let asm = domain.matrix.assembler();
    let a = asm.diffusion(|q| c[q].conductivity)?;
    let cs = domain.matrix_constraints(Layout::Scalar)?;
    let sys = ConstrainedSystem::new(&a, &cs, *opts)?;
    let mut out = Vec::with_capacity(dim);
    let mut iterations = 0;
    for j in 0..dim {
        let e = Vec3::ith(j, 1.0);
        let b = asm.flux_load(|q| -(c[q].conductivity * e));
        let (x, st) = sys.solve(&b, None).context(|| format!("thermal corrector {j}"))?;
        iterations += st.iterations;
        out.push(x);
    }
    Ok((out, iterations))
}

/// All correctors at the coefficients' `(t, x)`.
pub fn solve_correctors(domain: &CellDomain, coeffs: &CellCoefficients, opts: &SolverOptions) -> Result<Correctors> {
    let dim = domain.dim();
    let (elastic, thermal_stress, it1) = solve_elastic_correctors(domain, coeffs, opts)?;
    let (thermal, it2) = solve_thermal_correctors(domain, coeffs, opts)?;
    Ok(Correctors {
        dim,
        pairs: symmetric_pairs(dim),
        elastic,
        thermal_stress,
        thermal,
        iterations: it1 + it2,
    })
}

/// Per-simplex strain `S + sym ∇τ` for each pair and the thermal-stress
/// corrector's strain, on the matrix phase.
pub fn corrector_strains(domain: &CellDomain, corr: &Correctors) -> (Vec<Vec<Mat3>>, Vec<Mat3>) {
    let asm = domain.matrix.assembler();
    let n = domain.matrix.mesh.n_cells();
    let per_pair = corr
        .pairs
        .iter()
        .zip(&corr.elastic)
        .map(|(&(j, k), tau)| {
            let s = unit_strain(j, k);
            (0..n).map(|e| s + crate::tensor::sym(&asm.vector_gradient(e, tau))).collect()
        })
        .collect();
    let thermal = (0..n).map(|e| crate::tensor::sym(&asm.vector_gradient(e, &corr.thermal_stress))).collect();
    (per_pair, thermal)
}
