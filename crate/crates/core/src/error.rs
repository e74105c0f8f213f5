use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("blank image: residual area V(0) is zero")]
    BlankImage,
    #[error("pattern spectrum did not reach a null residual within {0} openings")]
    NotConverged(usize),
    #[error("unknown {kind} '{name}' (expected one of: {expected})")]
    UnknownName {
        kind: &'static str,
        name: String,
        expected: String,
    },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate fold {fold}: {reason}")]
    DegenerateFold { fold: usize, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
