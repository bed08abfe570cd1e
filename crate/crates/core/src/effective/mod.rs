//! Homogenized coefficients assembled from the cell correctors.

mod checks;
mod coefficients;
mod table;

pub use checks::{check_invariants, probe_vectors, InvariantReport, PROBE_SEED};
pub use coefficients::{
    assemble_effective, compute_effective_heat, compute_effective_mechanics, effective_coefficients, strain_basis,
    CellSolution, EffectiveCoefficients, EffectiveHeat, EffectiveMechanics, EffectiveOptions, Interpretation,
};
pub use table::{csv_header, csv_row, tabulate_effective, CellContext, EffectiveCache, EffectiveTable};
