use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the alignment pipeline.
///
/// Each variant maps onto one of the CLI exit categories through
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dataset format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("integrity error in {path} line {line}: {message}")]
    Integrity {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
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

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "config",
            Error::Format { .. } => "format",
            Error::Integrity { .. } => "integrity",
            Error::Shape(_) => "shape",
            Error::Domain(_) => "domain",
            Error::Degenerate(_) => "degenerate",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit status: 2 config, 3 data, 4 numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 2,
            Error::Format { .. } | Error::Integrity { .. } | Error::Shape(_) | Error::Io { .. } => {
                3
            }
            Error::Domain(_) | Error::Degenerate(_) => 4,
        }
    }
}
