use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("insufficient matches: need at least {needed}, got {got}")]
    InsufficientMatches { needed: usize, got: usize },

    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(&'static str),

    #[error("external matcher failed: {0}")]
    AdapterFailure(String),

    #[error("unreadable input {path}: {reason}")]
    UnreadableInput { path: PathBuf, reason: String },

    #[error("corrupt pyramid manifest {path}: {reason}")]
    CorruptPyramidManifest { path: PathBuf, reason: String },

    #[error("failed to write output {path}: {reason}")]
    OutputWriteFailure { path: PathBuf, reason: String },

    #[error("malformed landmark CSV {path}: {reason}")]
    MalformedCsv { path: PathBuf, reason: String },

    #[error("landmarks given in physical units but no pixel spacing is known")]
    MissingSpacing,

    #[error("landmark sets do not correspond: {0}")]
    LandmarkMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn unreadable(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::UnreadableInput {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn write_failure(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::OutputWriteFailure {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn corrupt_manifest(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::CorruptPyramidManifest {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
