use std::path::PathBuf;

use crate::tensor::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("transformation is not admissible at t = {t}, y = ({}, {}, {}): det F = {jacobian}", y[0], y[1], y[2])]
    NonPositiveJacobian { t: f64, y: Vec3, jacobian: f64 },

    #[error("cell point ({}, {}, {}) lies outside the unit cell", .0[0], .0[1], .0[2])]
    OutsideCell(Vec3),

    #[error("pushed-forward normal degenerates (|F^-T n0| = {0:e})")]
    DegenerateNormal(f64),

    #[error("invalid material parameters: {0}")]
    Material(String),

    #[error("invalid transformation: {0}")]
    Transformation(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error("constraints: {0}")]
    Constraint(String),

    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e} (history tail: {history:?})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("operator is not positive definite: curvature {curvature:e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("dense factorization failed: {0}")]
    Factorization(String),

    #[error("fixed-point coupling did not converge in {iterations} iterations (last change {change:e})")]
    FixedPoint { iterations: usize, change: f64 },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    ConfigValue { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(context()))
    }
}
