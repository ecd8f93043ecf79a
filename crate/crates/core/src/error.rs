use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {m}x{n}: both dimensions must be at least 3")]
    InvalidGrid { m: usize, n: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite value at cell ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("degenerate homotopy: non-positive composite value {value} at cell ({i}, {j})")]
    DegenerateHomotopy { i: usize, j: usize, value: f64 },

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("deformation correction failed: {0}")]
    CorrectionFailure(String),

    #[error("reference and template are identical; relative SSD is undefined")]
    UndefinedDenominator,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
