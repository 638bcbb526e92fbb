use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in point ({0}, {1})")]
    NonFinite(f64, f64),

    #[error("invalid constellation: {0}")]
    Constellation(String),

    #[error("invalid channel parameters: {0}")]
    Channel(String),

    #[error("demapper error: {0}")]
    Demapper(String),

    #[error("code error: {0}")]
    Code(String),

    #[error("alist parse error at line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for configuration problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
