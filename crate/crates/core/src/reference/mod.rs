//! The ε-resolved fixed-domain solver and the checks run against it:
//! norm bundles, operator structure and the distance to the homogenized
//! solution.

mod compare;
mod epsilon;
mod norms;
mod structure;

pub use compare::{compare_solutions, two_scale_compare, CompareRow, CompareTable};
pub use epsilon::{
    solve_epsilon_problem, EpsilonFields, EpsilonOperators, EpsilonRecord, EpsilonSolution, EpsilonSolver,
    EpsilonState,
};
pub use norms::{
    apriori_norm_bundle, interface_l2_squared, phase_gradient_norms, trace_constant, trace_ratio, trace_terms, NormBundle,
};
pub use structure::{
    korn_constant, operator_structure_checks, StructureReport, StructureSample, N_PROBES, STRUCTURE_SEED,
    SYMMETRY_TOL,
};
