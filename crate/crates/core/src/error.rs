use thiserror::Error;

/// Errors raised by the estimators and experiment harnesses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("series is not summable: {0}")]
    NonSummable(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("trajectory left the declared bound: {0}")]
    BoundViolation(String),

    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, err: impl FnOnce() -> Error) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}
