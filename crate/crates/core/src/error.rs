use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller-supplied value violates an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two tensors or files that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Malformed file content. `location` is a byte offset or a row number.
    #[error("format error in {context} at {location}: {message}")]
    Format {
        context: String,
        location: String,
        message: String,
    },

    /// A required file section or split is absent.
    #[error("missing data: {0}")]
    MissingData(String),

    #[error("unsupported file version: {0}")]
    Version(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub fn at_offset(context: impl Into<String>, offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            location: format!("byte {offset}"),
            message: message.into(),
        }
    }

    pub fn at_row(context: impl Into<String>, row: usize, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            location: format!("row {row}"),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data/format, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) => 1,
            Error::ShapeMismatch(_)
            | Error::Format { .. }
            | Error::MissingData(_)
            | Error::Version(_)
            | Error::Io { .. } => 2,
            Error::Numeric(_) => 3,
        }
    }
}
