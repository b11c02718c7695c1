use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied settings (ranges, counts, weights).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Inputs whose shapes do not agree with each other.
    #[error("structural mismatch: {0}")]
    Structure(String),

    /// An operation was called in a state that its contract forbids.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("enumeration budget exceeded: {needed} assignments > budget {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("training diverged: {0}")]
    Training(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 0 is success, 2 usage/config, 3 training failure, 4 verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Training(_) => 3,
            Error::Verification(_) => 4,
            _ => 2,
        }
    }
}
