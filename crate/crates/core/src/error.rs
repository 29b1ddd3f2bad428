use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("vector is not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("no k <= {k_max} satisfies the condition")]
    NotFound { k_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
