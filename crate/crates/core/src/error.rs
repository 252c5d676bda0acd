use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or data that violate a documented precondition.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {what} ({left} vs {right})")]
    Dimension {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("numerical failure: {0}")]
    Solver(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn dim(what: impl Into<String>, left: usize, right: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            left,
            right,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's data rather than by the solver.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Solver(_))
    }
}
