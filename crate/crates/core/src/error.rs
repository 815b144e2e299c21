use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "invalid bounding box ({x1}, {y1}, {x2}, {y2}): negative extent or non-finite coordinate"
    )]
    InvalidBox { x1: f64, y1: f64, x2: f64, y2: f64 },

    #[error("scale factors must be positive, got ({sx}, {sy})")]
    NonPositiveScale { sx: f64, sy: f64 },

    #[error("dimensions must be positive, got {0}")]
    NonPositiveDimension(String),

    #[error("group needs at least 2 responses, got {0}")]
    GroupTooSmall(usize),

    #[error("probability ratio must be positive and finite, got {0}")]
    NonPositiveRatio(f64),

    #[error("infinite divergence: p[{index}] = {p} but q[{index}] = 0")]
    InfiniteDivergence { index: usize, p: f64 },

    #[error("malformed distribution: {0}")]
    BadDistribution(String),

    #[error("KL divergence must be non-negative, got {0}")]
    NegativeKl(f64),

    #[error("need {requested} eligible records, only {available} available")]
    InsufficientRecords { requested: usize, available: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("inconsistent scene {id}: {reason}")]
    InconsistentScene { id: u64, reason: String },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    /// True for errors caused by the contents of an input file (as opposed to
    /// configuration or I/O failures).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. } | Error::InconsistentScene { .. } | Error::Io { .. }
        )
    }
}
