use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not positive definite after diagonal jitter")]
    NotPositiveDefinite,

    #[error("negative radicand {0:e} in conditional prior")]
    NegativeRadicand(f64),

    #[error("negative variance factor {0:e} in predictive scale")]
    NegativeVarianceFactor(f64),

    #[error("quadrature did not converge: {0}")]
    QuadratureDivergence(String),

    #[error("stationary distribution is not unique ({0} closed classes)")]
    NonUniqueStationary(usize),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("optimization failure: {0}")]
    OptimFailure(String),

    #[error("{failed} of {total} replications failed")]
    ReplicationAbort { failed: usize, total: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Invalid(e.to_string())
    }
}
