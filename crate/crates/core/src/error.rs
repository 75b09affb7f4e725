use std::path::PathBuf;

use thiserror::Error;

use crate::metrics::MetricId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Integrity,
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {context}: {message}")]
    Format { context: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty corpus: no valid documents in input")]
    EmptyCorpus,

    #[error("{metric}: degenerate input ({reason})")]
    Degenerate { metric: MetricId, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("train/held-out leakage: {count} shared document id(s), first {first}")]
    Leakage { count: usize, first: String },

    #[error("out of range: {0}")]
    Range(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            message: message.into(),
        }
    }

    pub fn degenerate(metric: MetricId, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            metric,
            reason: reason.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Range(_) => ErrorCategory::Config,
            _ => ErrorCategory::Integrity,
        }
    }
}
