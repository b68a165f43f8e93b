use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("degenerate illuminant: chromaticity ({x}, {y}) maps to non-positive RGB")]
    DegenerateIlluminant { x: f64, y: f64 },

    #[error("degenerate channel {channel}: zero mean")]
    DegenerateChannel { channel: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("missing entries: {}", .0.join(", "))]
    Missing(Vec<String>),

    #[error("{path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("malformed cache: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
