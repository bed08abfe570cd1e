//! Two-scale thermoelasticity of a periodic two-phase medium whose inclusions
//! move along a prescribed cell deformation.
//!
//! The crate poses all equations on the undeformed reference cell through a
//! given transformation and provides
//!
//! * [`kinematics`]: transformations, admissibility sampling and the pulled-back coefficients;
//! * [`mesh`] and [`fem`]: interface-fitted simplicial meshes and P1 finite elements;
//! * [`cell`] and [`effective`]: periodic correctors and effective coefficients;
//! * [`twoscale`]: the coupled macro/micro time stepper of the homogenized model;
//! * [`reference`]: a solver on the ε-periodic geometry and the checks built on it;
//! * [`config`] and [`cli`]: run configuration and the command-line subcommands.

pub mod cell;
pub mod cli;
pub mod config;
pub mod effective;
pub mod error;
pub mod fem;
pub mod kinematics;
pub mod mesh;
pub mod problem;
pub mod reference;
pub mod tensor;
pub mod twoscale;

pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
