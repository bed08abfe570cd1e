use crate::cell::{corrector_strains, solve_correctors, CellCoefficients, CellDomain, Correctors};
use crate::error::Result;
use crate::fem::SolverOptions;
use crate::kinematics::{MaterialParams, Sources, Transformation};
use crate::tensor::{symmetric_pairs, unit_strain, Mat3, Tensor4, Vec3};

/// Which reading of the capacity and dissipation formulas to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Interpretation {
    /// Capacity `ρ_A c_A |Y_A| + α_A ∫ div τ^u`; dissipation
    /// `∫ γ_ref + γ_A ∫ div τ_jk + γ_B |Y_B| I`.
    #[default]
    Literal,
    /// Limits of the decoupled weak form: capacity `∫ c_ref + ∫ γ_ref : ∇τ^u`,
    /// dissipation `∫ γ_ref : (E_jk + ∇τ_jk)`; the inclusion dissipation is
    /// taken from the micro problem instead.
    WeakForm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveOptions {
    pub interpretation: Interpretation,
    /// Multiply the interface normal-velocity integral by the latent heat.
    pub latent_heat_in_weff: bool,
    pub solver: SolverOptions,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        EffectiveOptions {
            interpretation: Interpretation::Literal,
            latent_heat_in_weff: true,
            solver: SolverOptions::default(),
        }
    }
}

/// Mechanical effective quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveMechanics {
    pub stiffness: Tensor4,
    pub expansion: Mat3,
    /// `∫_Γ H_ref n₀ ds`.
    pub curvature_force: Vec3,
    pub force: Vec3,
}

/// Thermal effective quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHeat {
    pub conductivity: Mat3,
    pub capacity: f64,
    pub dissipation: Mat3,
    /// Interface heat sink density (normal-velocity integral, times the
    /// latent heat when enabled).
    pub latent_source: f64,
    pub heat_source: f64,
}

/// Homogenized coefficients at one `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveCoefficients {
    pub t: f64,
    pub x: Vec3,
    pub dim: usize,
    pub stiffness: Tensor4,
    pub expansion: Mat3,
    pub conductivity: Mat3,
    pub capacity: f64,
    pub dissipation: Mat3,
    pub curvature_force: Vec3,
    pub latent_source: f64,
    pub force: Vec3,
    pub heat_source: f64,
    /// Current measure `∫_{Y_A} J` of the matrix phase.
    pub matrix_measure: f64,
    pub inclusion_measure: f64,
    /// `∫_{Y_A} K_ref`, the upper bound of the effective conductivity.
    pub conductivity_bound: Mat3,
}

fn phase_measure(w: &[f64], c: &[crate::kinematics::TransformedCoefficients]) -> f64 {
    w.iter().zip(c).map(|(w, c)| w * c.jacobian).sum()
}

pub fn compute_effective_mechanics(
    domain: &CellDomain,
    coeffs: &CellCoefficients,
    corr: &Correctors,
) -> EffectiveMechanics {
    let dim = domain.dim();
    let pd = &domain.matrix;
    let nq = pd.assembler().n_qp();
    let c = &coeffs.matrix;
    let (strains, thermal) = corrector_strains(domain, corr);
    let pairs = symmetric_pairs(dim);
    let np = pairs.len();
    let mut table = vec![0.0; np * np];
    let mut expansion = Mat3::zeros();
    for e in 0..pd.mesh.n_cells() {
        for q in 0..nq {
            let i = e * nq + q;
            let w = pd.weights[i];
            let stresses: Vec<Mat3> = strains.iter().map(|s| c[i].stiffness.contract(&s[e])).collect();
            for m in 0..np {
                for n in 0..np {
                    table[m * np + n] += w * stresses[m].component_mul(&strains[n][e]).sum();
                }
            }
            expansion += (c[i].expansion - c[i].stiffness.contract(&thermal[e])) * w;
        }
    }
    let mut stiffness = Tensor4::zeros();
    for (m, &(a, b)) in pairs.iter().enumerate() {
        for (n, &(cc, d)) in pairs.iter().enumerate() {
            let v = 0.5 * (table[m * np + n] + table[n * np + m]);
            for (i, j) in [(a, b), (b, a)] {
                for (k, l) in [(cc, d), (d, cc)] {
                    stiffness.set(i, j, k, l, v);
                }
            }
        }
    }
    let curvature_force = domain
        .cell
        .interface
        .iter()
        .zip(&coeffs.interface)
        .map(|(f, ic)| ic.curvature_load * f.normal * f.measure)
        .sum();
    let force = pd.weights.iter().zip(c).map(|(w, c)| c.force * *w).sum::<Vec3>()
        + domain
            .inclusion
            .weights
            .iter()
            .zip(&coeffs.inclusion)
            .map(|(w, c)| c.force * *w)
            .sum::<Vec3>();
    EffectiveMechanics {
        stiffness,
        expansion,
        curvature_force,
        force,
    }
}

pub fn compute_effective_heat(
    domain: &CellDomain,
    coeffs: &CellCoefficients,
    corr: &Correctors,
    mat: &MaterialParams,
    opts: &EffectiveOptions,
) -> EffectiveHeat {
    let dim = domain.dim();
    let pd = &domain.matrix;
    let asm = pd.assembler();
    let nq = asm.n_qp();
    let c = &coeffs.matrix;
    let mut conductivity = Mat3::zeros();
    let mut stored = 0.0;
    let mut gamma_bulk = Mat3::zeros();
    let mut div_tu = 0.0;
    let mut gamma_tu = 0.0;
    let mut div_pairs = vec![0.0; corr.pairs.len()];
    let mut gamma_pairs = vec![0.0; corr.pairs.len()];
    for e in 0..pd.mesh.n_cells() {
        let grads: Vec<Vec3> = (0..dim)
            .map(|j| asm.scalar_gradient(e, &corr.thermal[j]) + Vec3::ith(j, 1.0))
            .collect();
        let gtu = asm.vector_gradient(e, &corr.thermal_stress);
        let gpairs: Vec<Mat3> = corr.elastic.iter().map(|t| asm.vector_gradient(e, t)).collect();
        for q in 0..nq {
            let i = e * nq + q;
            let w = pd.weights[i];
            for a in 0..dim {
                let kg = c[i].conductivity * grads[a];
                for b in 0..dim {
                    conductivity[(b, a)] += w * kg.dot(&grads[b]);
                }
            }
            stored += w * c[i].capacity;
            gamma_bulk += c[i].dissipation * w;
            div_tu += w * gtu.trace();
            gamma_tu += w * c[i].dissipation.component_mul(&gtu).sum();
            for (m, g) in gpairs.iter().enumerate() {
                div_pairs[m] += w * g.trace();
                gamma_pairs[m] += w * c[i].dissipation.component_mul(g).sum();
            }
        }
    }
    conductivity = crate::tensor::sym(&conductivity);
    let matrix_measure = phase_measure(&pd.weights, c);
    let inclusion_measure = phase_measure(&domain.inclusion.weights, &coeffs.inclusion);
    let (capacity, dissipation) = match opts.interpretation {
        Interpretation::Literal => {
            let cap = mat.matrix.volumetric_heat_capacity() * matrix_measure + mat.matrix.expansion * div_tu;
            let mut d = gamma_bulk;
            for (m, &(j, k)) in corr.pairs.iter().enumerate() {
                d[(j, k)] += mat.matrix.dissipation * div_pairs[m];
                if j != k {
                    d[(k, j)] += mat.matrix.dissipation * div_pairs[m];
                }
            }
            for a in 0..dim {
                d[(a, a)] += mat.inclusion.dissipation * inclusion_measure;
            }
            (cap, d)
        }
        Interpretation::WeakForm => {
            let mut d = gamma_bulk;
            for (m, &(j, k)) in corr.pairs.iter().enumerate() {
                d[(j, k)] += gamma_pairs[m];
                if j != k {
                    d[(k, j)] += gamma_pairs[m];
                }
            }
            (stored + gamma_tu, d)
        }
    };
    let w_int: f64 = domain
        .cell
        .interface
        .iter()
        .zip(&coeffs.interface)
        .map(|(f, ic)| ic.normal_velocity * f.measure)
        .sum();
    let latent_source = if opts.latent_heat_in_weff { mat.latent_heat * w_int } else { w_int };
    let heat_source = pd.weights.iter().zip(c).map(|(w, c)| w * c.heat_source).sum::<f64>()
        + domain
            .inclusion
            .weights
            .iter()
            .zip(&coeffs.inclusion)
            .map(|(w, c)| w * c.heat_source)
            .sum::<f64>();
    EffectiveHeat {
        conductivity,
        capacity,
        dissipation,
        latent_source,
        heat_source,
    }
}

/// Effective coefficients together with the data they were computed from.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub coefficients: CellCoefficients,
    pub correctors: Correctors,
    pub effective: EffectiveCoefficients,
}

pub fn assemble_effective(
    domain: &CellDomain,
    coeffs: &CellCoefficients,
    corr: &Correctors,
    mat: &MaterialParams,
    opts: &EffectiveOptions,
) -> EffectiveCoefficients {
    let m = compute_effective_mechanics(domain, coeffs, corr);
    let h = compute_effective_heat(domain, coeffs, corr, mat, opts);
    let conductivity_bound = crate::tensor::sym(
        &domain
            .matrix
            .weights
            .iter()
            .zip(&coeffs.matrix)
            .map(|(w, c)| c.conductivity * *w)
            .sum::<Mat3>(),
    );
    EffectiveCoefficients {
        t: coeffs.t,
        x: coeffs.x,
        dim: domain.dim(),
        stiffness: m.stiffness,
        expansion: m.expansion,
        conductivity: h.conductivity,
        capacity: h.capacity,
        dissipation: h.dissipation,
        curvature_force: m.curvature_force,
        latent_source: h.latent_source,
        force: m.force,
        heat_source: h.heat_source,
        matrix_measure: phase_measure(&domain.matrix.weights, &coeffs.matrix),
        inclusion_measure: phase_measure(&domain.inclusion.weights, &coeffs.inclusion),
        conductivity_bound,
    }
}

/// Solves the cell problems at `(t, x)` and assembles the effective coefficients.
pub fn effective_coefficients(
    domain: &CellDomain,
    tr: &Transformation,
    mat: &MaterialParams,
    sources: &Sources,
    t: f64,
    x: &Vec3,
    opts: &EffectiveOptions,
) -> Result<CellSolution> {
    let coefficients = domain.coefficients(tr, mat, sources, t, x)?;
    let correctors = solve_correctors(domain, &coefficients, &opts.solver)?;
    let effective = assemble_effective(domain, &coefficients, &correctors, mat, opts);
    Ok(CellSolution {
        coefficients,
        correctors,
        effective,
    })
}

/// Unit strain basis used by the effective stiffness, exposed for checks.
pub fn strain_basis(dim: usize) -> Vec<Mat3> {
    symmetric_pairs(dim).into_iter().map(|(j, k)| unit_strain(j, k)).collect()
}
