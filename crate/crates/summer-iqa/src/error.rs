//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IqaError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("dimension mismatch {width_a}x{height_a} vs {width_b}x{height_b}")]
    ShapeMismatch {
        width_a: usize,
        height_a: usize,
        width_b: usize,
        height_b: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("manifest parse error at {path}:{line}: {detail}")]
    ManifestParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("benchmark error: {0}")]
    Benchmark(String),
}

pub type Result<T> = std::result::Result<T, IqaError>;

impl IqaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IqaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        IqaError::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
