//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A real-valued input contained NaN or an infinity.
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid quantization parameters: {0}")]
    InvalidQuantParams(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("graph construction failed: {0}")]
    GraphConstruction(String),

    /// Inference inputs rejected before any compute ran.
    #[error("inference rejected: {0}")]
    InferenceRejected(String),

    #[error("training refused: {0}")]
    Training(String),

    /// Malformed dataset content, with the file and 1-based line that broke.
    #[error("{path}: line {line}: {message}")]
    DataFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset file missing: {0}")]
    DatasetMissing(PathBuf),

    #[error("dataset rejected: {0}")]
    DatasetInvalid(String),

    /// A required model manifest or device profile is absent.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("manifest rejected: {0}")]
    Manifest(String),

    #[error("distance computation rejected: {0}")]
    Distance(String),

    #[error("cascade configuration rejected: {0}")]
    Cascade(String),

    #[error("unknown frequency point {freq} MHz for device {device}; available: {available:?}")]
    UnknownFrequency {
        device: String,
        freq: u32,
        available: Vec<u32>,
    },

    #[error("cost model rejected: {0}")]
    CostModel(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 missing artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::MissingArtifact(_) => 3,
            _ => 2,
        }
    }
}
