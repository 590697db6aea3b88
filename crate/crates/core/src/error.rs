use thiserror::Error;

/// Errors raised by the denoising pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("secular equation root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("linear solve failed: {0}")]
    SolverFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
