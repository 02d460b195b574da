use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: entry ({row},{col}) = {value} but ({col},{row}) = {mirror}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Asymmetric {
        row: usize,
        col: usize,
        value: f64,
        mirror: f64,
        line: Option<usize>,
    },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("starting vector is zero")]
    ZeroVector,

    #[error("requested {requested} Lanczos steps but the operator has dimension {dimension}")]
    TooManySteps { requested: usize, dimension: usize },

    #[error("tridiagonal eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("interval [{a}, {b}] does not contain node {node}")]
    EndpointViolation { a: f64, b: f64, node: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures caused by bad input or I/O rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::NotSquare { .. }
                | Error::Asymmetric { .. }
                | Error::InvalidStructure(_)
                | Error::InvalidParameter(_)
                | Error::Precondition(_)
                | Error::DimensionMismatch { .. }
                | Error::TooManySteps { .. }
                | Error::EndpointViolation { .. }
        )
    }
}
