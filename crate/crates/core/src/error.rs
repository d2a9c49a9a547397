use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (jitter up to {max_jitter:e} tried)")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("parameter shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite ELBO at step {step}: {detail}")]
    NonFiniteElbo { step: usize, detail: String },
    #[error("hypervolume supports 1 to 4 objectives, got {0}")]
    ObjectiveCountUnsupported(usize),
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("input outside the unit-cube domain: {0}")]
    OutOfDomain(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn dim_mismatch(what: &str, expected: usize, actual: usize) -> Error {
    Error::DimensionMismatch(alloc::format!("{what}: expected {expected}, got {actual}"))
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
