use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("range [{start}, {end}) exceeds signal length {len}")]
    Bounds { start: usize, end: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("gap placement failed: {0}")]
    Placement(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("gap {gap}: insufficient context ({got} samples available, need {needed})")]
    InsufficientContext { gap: usize, needed: usize, got: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("SDR undefined: reference has zero energy{}", .0.map(|g| format!(" in gap {g}")).unwrap_or_default())]
    UndefinedReference(Option<usize>),

    #[error("unsupported audio format: {0}")]
    Format(String),

    #[error("{channels}-channel input requires downmix")]
    Channels { channels: u16 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
