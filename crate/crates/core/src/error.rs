use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed cell in a CSV input. `row` is 1-based and counts the header.
    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("remote model {model} batch {batch}: {message}")]
    Remote {
        model: String,
        batch: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn cell(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Cell {
            row,
            column: column.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable process exit code: 1 validation, 2 I/O, 3 remote.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Cell { .. } | Error::Validation(_) => 1,
            Error::Io { .. } => 2,
            Error::Remote { .. } => 3,
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Cell { .. } | Error::Validation(_) => "validation",
            Error::Io { .. } => "io",
            Error::Remote { .. } => "remote",
        }
    }
}
