//! Prescribed cell motion, its kinematics, and coefficients pulled back to
//! the fixed reference cell.

mod admissibility;
mod coefficients;
mod material;
mod tabulated;
mod transform;

pub use admissibility::{validate_admissibility, AdmissibilityReport};
pub use coefficients::{interface_coefficients, transformed_coefficients, InterfaceCoefficients, TransformedCoefficients};
pub use material::{
    scaled_coefficients, MaterialParams, Phase, PhaseMaterial, ScalarFn, ScalarSource, SourcePoint, Sources,
    TimeSeries, VectorFn, VectorSource,
};
pub use tabulated::TabulatedMotion;
pub use transform::{inverse, Amplitude, Cutoff, Family, InterfaceSample, KinematicSample, RadialGrowth, Transformation};

use crate::error::Result;
use crate::tensor::Vec3;

/// Free-function form of [`Transformation::kinematics`].
pub fn eval_kinematics(tr: &Transformation, t: f64, x: &Vec3, y: &Vec3) -> Result<KinematicSample> {
    tr.kinematics(t, x, y)
}

/// Free-function form of [`Transformation::interface`].
pub fn eval_interface(tr: &Transformation, t: f64, x: &Vec3, y: &Vec3, n0: &Vec3) -> Result<InterfaceSample> {
    tr.interface(t, x, y, n0)
}
