//! Linear finite elements: sparse storage, assembly of the bilinear forms,
//! constraint handling and an SPD solver.

mod assembly;
mod constraints;
pub mod parallel;
mod quadrature;
mod solver;
mod sparse;

pub use assembly::{interface_scalar_load, interface_vector_load, Assembler, Layout};
pub use constraints::{apply_constraints, ConstrainedSystem, ConstraintSet, Reduction};
pub use quadrature::{centroid_rule, simplex_rule, Quadrature};
pub use solver::{pcg, solve_spd, DenseFactor, Operator, SolveStats, SolverOptions};
pub use sparse::CsrMatrix;
