//! Periodic cell problems on the matrix phase of the reference cell.

mod cache;
mod correctors;
mod domain;

pub use cache::{Quantizer, SampleCache, SampleKey};
pub use correctors::{
    corrector_strains, solve_correctors, solve_elastic_correctors, solve_thermal_correctors, Correctors,
};
pub use domain::{CellCoefficients, CellDomain, PhaseDomain};
