use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index set would contain more than {cap} frequencies")]
    SizeCapExceeded { cap: usize },

    #[error("instance too large for the dense path: {0}")]
    DenseCapExceeded(String),

    #[error("no reconstructing generator found up to M = {ceiling} ({trials} trials per component)")]
    GeneratorSearchFailed { ceiling: u64, trials: usize },

    #[error("all point weights are zero")]
    ZeroWeights,

    #[error("normal matrix is singular")]
    Singular,

    #[error("spectral certificate failed: {0}")]
    CertificateFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
