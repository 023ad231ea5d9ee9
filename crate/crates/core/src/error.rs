use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("sequence has no usable frames")]
    EmptySequence,
    #[error("keypoint {keypoint} is never visible; channel cannot be recovered")]
    UnrecoverableChannel { keypoint: &'static str },
    #[error("unsupported frame rate {0} fps (downsampling requires >= 30)")]
    UnsupportedRate(f64),
    #[error("degenerate pose: {0}")]
    DegeneratePose(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("class {class} has fewer than 2 samples")]
    InsufficientSamples { class: String },
    #[error("class {class} has a single sample; SMOTE cannot interpolate")]
    CannotInterpolate { class: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected} columns, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
