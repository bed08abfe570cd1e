use crate::error::Result;
use crate::kinematics::material::{MaterialParams, Phase, PhaseMaterial, SourcePoint, Sources};
use crate::kinematics::transform::{inverse, InterfaceSample, KinematicSample, Transformation};
use crate::tensor::{sym, symmetric_pairs, unit_strain, Mat3, Tensor4, Vec3};

/// Bulk coefficients pulled back to the reference cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedCoefficients {
    /// Symmetrized push-forward of strains, `B ↦ sym(F^-T B)`.
    pub symmetrizer: Tensor4,
    pub stiffness: Tensor4,
    pub expansion: Mat3,
    pub dissipation: Mat3,
    pub capacity: f64,
    pub conductivity: Mat3,
    /// Reference-frame velocity `F^-1 v`.
    pub velocity: Vec3,
    pub jacobian: f64,
    pub force: Vec3,
    pub heat_source: f64,
}

/// Interface coefficients pulled back to the reference interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceCoefficients {
    pub sample: InterfaceSample,
    /// `J · W_Γ`.
    pub normal_velocity: f64,
    /// `J σ₀ H_Γ F^-1`; multiply by the reference normal for the traction.
    pub curvature_load: Mat3,
}

fn symmetrizer(g: &Mat3) -> Tensor4 {
    let mut a = Tensor4::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut v = 0.0;
                    if j == l {
                        v += 0.5 * g[(i, k)];
                    }
                    if i == l {
                        v += 0.5 * g[(j, k)];
                    }
                    a.set(i, j, k, l, v);
                }
            }
        }
    }
    a
}

/// `J 𝔸ᵀ C 𝔸` restricted to symmetric strains, stored with full minor symmetry.
fn pulled_back_stiffness(c: &Tensor4, g: &Mat3, jacobian: f64, dim: usize) -> Tensor4 {
    let pairs = symmetric_pairs(dim);
    let pushed: Vec<Mat3> = pairs.iter().map(|&(a, b)| sym(&(g * unit_strain(a, b)))).collect();
    let stressed: Vec<Mat3> = pushed.iter().map(|p| c.contract(p)).collect();
    let mut out = Tensor4::zeros();
    for (m, &(a, b)) in pairs.iter().enumerate() {
        for (n, &(cc, d)) in pairs.iter().enumerate() {
            let v = jacobian * stressed[m].component_mul(&pushed[n]).sum();
            for (i, j) in [(a, b), (b, a)] {
                for (k, l) in [(cc, d), (d, cc)] {
                    out.set(i, j, k, l, v);
                }
            }
        }
    }
    out
}

impl TransformedCoefficients {
    pub fn from_kinematics(k: &KinematicSample, m: &PhaseMaterial, dim: usize, heat_source: f64, force: Vec3) -> Self {
        let finv = inverse(&k.gradient);
        let g = finv.transpose();
        let j = k.jacobian;
        let mut conductivity = finv * m.conductivity * g * j;
        // exact symmetry regardless of rounding in the triple product
        conductivity = sym(&conductivity);
        let mut expansion = g * (j * m.expansion);
        let mut dissipation = g * (j * m.dissipation);
        for a in dim..3 {
            for b in 0..3 {
                expansion[(a, b)] = 0.0;
                expansion[(b, a)] = 0.0;
                dissipation[(a, b)] = 0.0;
                dissipation[(b, a)] = 0.0;
            }
        }
        TransformedCoefficients {
            symmetrizer: symmetrizer(&g),
            stiffness: pulled_back_stiffness(&m.stiffness, &g, j, dim),
            expansion,
            dissipation,
            capacity: j * m.volumetric_heat_capacity(),
            conductivity,
            velocity: finv * k.velocity,
            jacobian: j,
            force: force * j,
            heat_source: heat_source * j,
        }
    }
}

/// Pulled-back bulk coefficients of `phase` at `(t, x, y)`.
pub fn transformed_coefficients(
    tr: &Transformation,
    mat: &MaterialParams,
    phase: Phase,
    t: f64,
    x: &Vec3,
    y: &Vec3,
    sources: &Sources,
) -> Result<TransformedCoefficients> {
    let k = tr.kinematics(t, x, y)?;
    let p = SourcePoint {
        t,
        x: *x,
        y: tr.map(t, x, y)?,
    };
    Ok(TransformedCoefficients::from_kinematics(
        &k,
        mat.phase(phase),
        tr.dim,
        sources.heat(phase).eval(&p),
        sources.force(phase).eval(&p),
    ))
}

/// Pulled-back interface coefficients at a reference interface point.
pub fn interface_coefficients(
    tr: &Transformation,
    mat: &MaterialParams,
    t: f64,
    x: &Vec3,
    y: &Vec3,
    n0: &Vec3,
) -> Result<InterfaceCoefficients> {
    let k = tr.kinematics(t, x, y)?;
    let sample = tr.interface(t, x, y, n0)?;
    let mut finv = inverse(&k.gradient);
    for a in tr.dim..3 {
        finv[(a, a)] = 0.0;
    }
    Ok(InterfaceCoefficients {
        sample,
        normal_velocity: k.jacobian * sample.normal_velocity,
        curvature_load: finv * (k.jacobian * mat.surface_tension * sample.curvature),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::material::PhaseMaterial;

    #[test]
    fn stretched_conductivity() {
        let m = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
        let k = KinematicSample {
            gradient: Mat3::new(2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
            jacobian: 2.0,
            velocity: Vec3::zeros(),
        };
        let c = TransformedCoefficients::from_kinematics(&k, &m, 2, 0.0, Vec3::zeros());
        assert!((c.conductivity[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((c.conductivity[(1, 1)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_reduces_to_static_values() {
        let mut m = PhaseMaterial::isotropic(3, 2.0, 0.7, 1.3);
        m.expansion = 0.4;
        m.density = 2.0;
        let k = KinematicSample {
            gradient: Mat3::identity(),
            jacobian: 1.0,
            velocity: Vec3::zeros(),
        };
        let c = TransformedCoefficients::from_kinematics(&k, &m, 3, 0.0, Vec3::zeros());
        assert!(c.stiffness.max_abs_diff(&m.stiffness) < 1e-14);
        assert_eq!(c.conductivity, m.conductivity);
        assert_eq!(c.expansion, Mat3::identity() * 0.4);
        assert_eq!(c.capacity, 2.0);
    }

    #[test]
    fn stiffness_energy_matches_definition() {
        let m = PhaseMaterial::isotropic(2, 1.5, 0.8, 1.0);
        let f = Mat3::new(1.1, 0.2, 0.0, -0.1, 0.9, 0.0, 0.0, 0.0, 1.0);
        let k = KinematicSample {
            gradient: f,
            jacobian: f.determinant(),
            velocity: Vec3::zeros(),
        };
        let c = TransformedCoefficients::from_kinematics(&k, &m, 2, 0.0, Vec3::zeros());
        let e1 = sym(&Mat3::new(0.3, 0.1, 0.0, 0.1, -0.2, 0.0, 0.0, 0.0, 0.0));
        let e2 = sym(&Mat3::new(-0.5, 0.4, 0.0, 0.4, 0.6, 0.0, 0.0, 0.0, 0.0));
        let g = f.try_inverse().unwrap().transpose();
        let a1 = c.symmetrizer.contract(&e1);
        assert!((a1 - sym(&(g * e1))).amax() < 1e-15);
        let direct = k.jacobian * m.stiffness.energy(&sym(&(g * e1)), &sym(&(g * e2)));
        assert!((c.stiffness.energy(&e1, &e2) - direct).abs() < 1e-14);
    }
}
