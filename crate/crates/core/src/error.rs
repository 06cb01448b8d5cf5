use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Raised for the zero matrix, whose spectral norm vanishes.
    #[error("stable rank undefined for the zero matrix")]
    UndefinedStableRank,

    #[error("invalid augmentation spec: {0}")]
    InvalidSpec(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("ingest error at {path}: {reason}")]
    Ingest { path: PathBuf, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("inference failed ({context}): {reason}")]
    Inference { context: String, reason: String },

    #[error("image codec error: {0}")]
    Codec(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Shape(_) => "shape",
            Error::Degenerate(_) => "degenerate",
            Error::UndefinedStableRank => "undefined_stable_rank",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Config(_) => "config",
            Error::Ingest { .. } => "ingest",
            Error::Manifest(_) => "manifest",
            Error::Inference { .. } => "inference",
            Error::Codec(_) => "codec",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
