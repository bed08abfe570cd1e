use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{block_eigenvalues, Mat3, Tensor4, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// Connected matrix phase.
    A,
    /// Inclusion phase.
    B,
}

/// Constants of one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMaterial {
    pub stiffness: Tensor4,
    pub conductivity: Mat3,
    pub expansion: f64,
    pub dissipation: f64,
    pub density: f64,
    pub heat_capacity: f64,
}

impl PhaseMaterial {
    pub fn isotropic(dim: usize, lambda: f64, mu: f64, conductivity: f64) -> Self {
        let mut k = Mat3::zeros();
        for i in 0..dim {
            k[(i, i)] = conductivity;
        }
        PhaseMaterial {
            stiffness: Tensor4::isotropic(lambda, mu, dim),
            conductivity: k,
            expansion: 0.0,
            dissipation: 0.0,
            density: 1.0,
            heat_capacity: 1.0,
        }
    }

    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.density * self.heat_capacity
    }

    fn validate(&self, dim: usize, name: &str) -> Result<()> {
        let bad = |m: String| Err(Error::Material(format!("phase {name}: {m}")));
        let c = &self.stiffness;
        if c.minor_symmetry_defect(dim) > 1e-12 || c.major_symmetry_defect(dim) > 1e-12 {
            return bad("stiffness lacks minor/major symmetry".into());
        }
        if !(c.min_mandel_eigenvalue(dim) > 0.0) {
            return bad("stiffness is not positive definite on symmetric strains".into());
        }
        let k = &self.conductivity;
        if (k - k.transpose()).amax() > 1e-12 * k.amax().max(1.0) {
            return bad("conductivity is not symmetric".into());
        }
        if !(block_eigenvalues(k, dim)[0] > 0.0) {
            return bad("conductivity is not positive definite".into());
        }
        for (label, v) in [("expansion", self.expansion), ("dissipation", self.dissipation)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{label} must be non-negative"));
            }
        }
        for (label, v) in [("density", self.density), ("heat_capacity", self.heat_capacity)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{label} must be positive"));
            }
        }
        Ok(())
    }
}

/// All physical constants of the two-phase medium.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialParams {
    pub dim: usize,
    pub matrix: PhaseMaterial,
    pub inclusion: PhaseMaterial,
    pub surface_tension: f64,
    pub latent_heat: f64,
}

impl MaterialParams {
    pub fn new(
        dim: usize,
        matrix: PhaseMaterial,
        inclusion: PhaseMaterial,
        surface_tension: f64,
        latent_heat: f64,
    ) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Material(format!("dimension {dim} is not 2 or 3")));
        }
        matrix.validate(dim, "A")?;
        inclusion.validate(dim, "B")?;
        if !(surface_tension >= 0.0 && surface_tension.is_finite()) {
            return Err(Error::Material("surface tension must be non-negative".into()));
        }
        if !latent_heat.is_finite() {
            return Err(Error::Material("latent heat must be finite".into()));
        }
        Ok(MaterialParams {
            dim,
            matrix,
            inclusion,
            surface_tension,
            latent_heat,
        })
    }

    pub fn phase(&self, phase: Phase) -> &PhaseMaterial {
        match phase {
            Phase::A => &self.matrix,
            Phase::B => &self.inclusion,
        }
    }

    /// Inclusion coefficients scaled for cell size `eps`: stiffness and
    /// conductivity by `eps²`, expansion and dissipation by `eps`.
    pub fn scaled(&self, eps: f64) -> MaterialParams {
        let mut out = self.clone();
        let b = &mut out.inclusion;
        b.stiffness = b.stiffness.scale(eps * eps);
        b.conductivity *= eps * eps;
        b.expansion *= eps;
        b.dissipation *= eps;
        out
    }
}

/// Free-function form of [`MaterialParams::scaled`].
pub fn scaled_coefficients(mat: &MaterialParams, eps: f64) -> MaterialParams {
    mat.scaled(eps)
}

/// Where a source is evaluated: time, deformed macroscopic position, deformed cell position.
#[derive(Clone, Copy, Debug)]
pub struct SourcePoint {
    pub t: f64,
    pub x: Vec3,
    pub y: Vec3,
}

pub type ScalarFn = Arc<dyn Fn(&SourcePoint) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&SourcePoint) -> Vec3 + Send + Sync>;

/// Piecewise-linear function of time, constant beyond its ends.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 {
            return 0.0;
        }
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.times.partition_point(|&s| s <= t);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.values[lo] * (1.0 - w) + self.values[hi] * w
    }
}

#[derive(Clone)]
pub enum ScalarSource {
    Constant(f64),
    Series(TimeSeries),
    Function(ScalarFn),
}

#[derive(Clone)]
pub enum VectorSource {
    Constant(Vec3),
    Function(VectorFn),
}

impl std::fmt::Debug for ScalarSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarSource::Constant(v) => write!(f, "Constant({v})"),
            ScalarSource::Series(s) => write!(f, "Series({} knots)", s.times.len()),
            ScalarSource::Function(_) => write!(f, "Function"),
        }
    }
}

impl std::fmt::Debug for VectorSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VectorSource::Constant(v) => write!(f, "Constant({:?})", v.as_slice()),
            VectorSource::Function(_) => write!(f, "Function"),
        }
    }
}

impl ScalarSource {
    pub fn eval(&self, p: &SourcePoint) -> f64 {
        match self {
            ScalarSource::Constant(v) => *v,
            ScalarSource::Series(s) => s.eval(p.t),
            ScalarSource::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarSource::Constant(v) if *v == 0.0)
    }
}

impl VectorSource {
    pub fn eval(&self, p: &SourcePoint) -> Vec3 {
        match self {
            VectorSource::Constant(v) => *v,
            VectorSource::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorSource::Constant(v) if *v == Vec3::zeros())
    }
}

/// Volume sources per phase, given on the deformed configuration.
#[derive(Clone, Debug)]
pub struct Sources {
    pub heat: [ScalarSource; 2],
    pub force: [VectorSource; 2],
}

impl Default for Sources {
    fn default() -> Self {
        Self::zero()
    }
}

impl Sources {
    pub fn zero() -> Self {
        Sources {
            heat: [ScalarSource::Constant(0.0), ScalarSource::Constant(0.0)],
            force: [VectorSource::Constant(Vec3::zeros()), VectorSource::Constant(Vec3::zeros())],
        }
    }

    pub fn heat(&self, phase: Phase) -> &ScalarSource {
        &self.heat[phase as usize]
    }

    pub fn force(&self, phase: Phase) -> &VectorSource {
        &self.force[phase as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.heat.iter().all(ScalarSource::is_zero) && self.force.iter().all(VectorSource::is_zero)
    }

    /// True when some source may vary with position.
    pub fn depends_on_position(&self) -> bool {
        self.heat.iter().any(|s| matches!(s, ScalarSource::Function(_)))
            || self.force.iter().any(|s| matches!(s, VectorSource::Function(_)))
    }

    /// True when every source is a constant.
    pub fn is_constant(&self) -> bool {
        self.heat.iter().all(|s| matches!(s, ScalarSource::Constant(_)))
            && self.force.iter().all(|s| matches!(s, VectorSource::Constant(_)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MaterialParams {
        let mut b = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
        b.expansion = 3.0;
        MaterialParams::new(2, PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0), b, 0.1, 0.0).unwrap()
    }

    #[test]
    fn scaling_examples() {
        let m = params();
        assert_eq!(m.scaled(1.0), m);
        let s = m.scaled(0.5);
        assert!((s.inclusion.conductivity[(0, 0)] - 0.25).abs() < 1e-15);
        assert_eq!(s.matrix, m.matrix);
        assert!((m.scaled(0.1).inclusion.expansion - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_conductivity() {
        let mut a = PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0);
        a.conductivity[(1, 1)] = -1.0;
        let err = MaterialParams::new(2, a, PhaseMaterial::isotropic(2, 1.0, 1.0, 1.0), 0.0, 0.0);
        assert!(matches!(err, Err(Error::Material(_))));
    }

    #[test]
    fn series_interpolates() {
        let s = TimeSeries {
            times: vec![0.0, 1.0],
            values: vec![1.0, 3.0],
        };
        assert_eq!(s.eval(0.5), 2.0);
        assert_eq!(s.eval(2.0), 3.0);
    }
}
