use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square or has inconsistent rows")]
    Shape,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("determinant is {0}, expected 1")]
    NotUnimodular(String),
    #[error("invalid matrix entry {0:?}")]
    ParseEntry(String),
    #[error("invalid word letter {0:?}; expected one of a, A, b, B")]
    ParseWord(char),
    #[error("SVD did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("element is not hyperbolic (trace {trace})")]
    NotHyperbolic { trace: String },
    #[error("fixed point at infinity (lower-left entry is zero)")]
    FixedPointAtInfinity,
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cannot sample from an empty enumeration")]
    EmptyEnumeration,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
