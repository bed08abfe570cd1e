//! Time integration of the distributed-microstructure limit system: macro
//! heat and quasi-static elasticity with effective coefficients, coupled at
//! every macro site to an inclusion problem on the reference cell.

mod macro_mesh;
mod micro;
mod run;
mod solver;

pub use macro_mesh::{MacroMesh, MicroSite};
pub use micro::{micro_solve, trace_defect, MicroOperators, MicroSpace, MicroState};
pub use run::{run_simulation, Diagnostics, SimulationOutput, StepRecord};
pub use solver::{TwoScaleOptions, TwoScaleSolver, TwoScaleState};
