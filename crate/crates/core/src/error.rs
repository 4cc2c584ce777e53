use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("kernel is reducible: state {to} is not reachable from state {from}")]
    Reducible { from: usize, to: usize },

    #[error("kernel is periodic with period {period}")]
    Periodic { period: usize },

    #[error("distribution is not invariant for the kernel (residual {residual:e})")]
    NotInvariant { residual: f64 },

    #[error("mixing time exceeds the cap of {cap} steps")]
    MixingCap { cap: u64 },

    #[error("precondition violated for the {block} block: {message}")]
    Precondition { block: String, message: String },

    #[error("similarity measure is infinite at h = {h}: {reason}")]
    Explosion { h: f64, reason: String },

    #[error("unsupported descriptor: {0}")]
    Unsupported(String),

    #[error("need at least {needed} finite points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
