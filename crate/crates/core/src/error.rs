use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite gradient in parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("invalid hidden width {width} for {architecture}: {reason}")]
    InvalidWidth {
        architecture: &'static str,
        width: usize,
        reason: &'static str,
    },

    #[error("quantile level {0} is outside [0, 1]")]
    TauOutOfRange(f64),

    #[error("network {0} feature injection")]
    FeatureMismatch(&'static str),

    #[error("operation requires the {expected} architecture")]
    WrongArchitecture { expected: &'static str },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss at update {update}")]
    NonFiniteLoss { update: usize },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
