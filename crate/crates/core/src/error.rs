use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the fusion library.
#[derive(Error, Debug)]
pub enum Error {
    /// Tensor or image dimensions do not line up; the message names the offending axis.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested configuration is outside what the architecture defines.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A file could not be parsed; `offset` is the byte position of the problem.
    #[error("malformed {what} at byte {offset}: {detail}")]
    Format {
        what: &'static str,
        offset: u64,
        detail: String,
    },

    /// A checkpoint with an unknown version field.
    #[error("unsupported checkpoint version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    /// A backward pass was handed a trace from a different forward pass.
    #[error("stale forward trace: {0}")]
    StaleTrace(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: non-finite loss at iteration {iteration}")]
    Diverged { iteration: u64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
