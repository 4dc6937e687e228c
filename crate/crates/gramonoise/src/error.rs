//! Crate-wide error type and process exit-code mapping.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Command-line misuse: bad flags, impossible flag combinations.
    #[error("usage: {0}")]
    Usage(String),

    /// Invalid configuration values (file or programmatic).
    #[error("config: {0}")]
    Config(String),

    /// A precondition on an operation was violated.
    #[error("{module}: {message}")]
    Domain { module: &'static str, message: String },

    /// File-system failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// WAV container problems, kept distinct from generic I/O.
    #[error("malformed wav {path}: {detail}")]
    MalformedWav { path: PathBuf, detail: String },
    #[error("unsupported wav codec in {path}: {detail}")]
    UnsupportedWav { path: PathBuf, detail: String },

    /// Non-finite values or other numeric breakdowns.
    #[error("numeric: {0}")]
    Numeric(String),
}

impl Error {
    pub fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain { module, message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Exit code for the CLI: 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Config(_)
            | Error::Domain { .. }
            | Error::Io { .. }
            | Error::MalformedWav { .. }
            | Error::UnsupportedWav { .. } => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
