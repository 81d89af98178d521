use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: u8 = 0;
    /// At least one verification record failed.
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    /// Unreadable, unwritable, truncated or otherwise malformed files.
    pub const IO: u8 = 3;
    pub const RESUME_REFUSED: u8 = 4;
    /// The computation itself reported an error.
    pub const COMPUTE: u8 = 5;
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid configuration: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { path: PathBuf, found: String, expected: u32 },

    #[error("cannot resume from {path}: {reason}")]
    ResumeRefused { path: PathBuf, reason: String },

    #[error(transparent)]
    Compute(#[from] prime_sums::Error),

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl ReportError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReportError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        ReportError::Format { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            ReportError::Usage(_) => exit::USAGE,
            ReportError::Io { .. }
            | ReportError::Format { .. }
            | ReportError::VersionMismatch { .. }
            | ReportError::Csv { .. }
            | ReportError::Json { .. } => exit::IO,
            ReportError::ResumeRefused { .. } => exit::RESUME_REFUSED,
            ReportError::Compute(prime_sums::Error::Config(_)) => exit::USAGE,
            ReportError::Compute(_) => exit::COMPUTE,
        }
    }
}

pub type Result<T> = std::result::Result<T, ReportError>;
