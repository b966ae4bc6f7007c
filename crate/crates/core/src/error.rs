use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can report.
///
/// Variants are grouped by [`Error::kind`], which the CLI maps onto exit codes
/// and a stable `hsdlab: error[<kind>]` prefix.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{column}`")]
    Schema { column: String },

    #[error("row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),

    #[error("unknown label `{0}` (expected HOF or NOT)")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("sample `{0}` has no tokens after encoding")]
    EmptySequence(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("dimension mismatch: file declares {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),

    #[error("ensemble mismatch: {0}")]
    EnsembleMismatch(String),

    #[error("no ids shared between prediction and gold files")]
    EmptyJoin,

    #[error("{0}")]
    Config(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("unsupported format version {found} (this build reads {supported})")]
    Version { found: u64, supported: u64 },

    #[error("tensor hash mismatch: stored {stored}, computed {computed}")]
    Hash { stored: String, computed: String },

    #[error("file is truncated")]
    Truncated,

    #[error("malformed checkpoint: {0}")]
    Corrupt(String),

    #[error("vocab fingerprint mismatch: checkpoint {checkpoint}, vocab {vocab}")]
    Fingerprint { checkpoint: String, vocab: String },
}

/// Coarse error classes, used for exit codes and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Data,
    Config,
    Argument,
    Checkpoint,
    Runtime,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Io => "io",
            ErrorKind::Data => "data",
            ErrorKind::Config => "config",
            ErrorKind::Argument => "argument",
            ErrorKind::Checkpoint => "checkpoint",
            ErrorKind::Runtime => "runtime",
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Csv(_)
            | Error::Schema { .. }
            | Error::Data { .. }
            | Error::DuplicateId(_)
            | Error::UnknownLabel(_)
            | Error::Format { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptyJoin
            | Error::Json(_) => ErrorKind::Data,
            Error::Config(_) => ErrorKind::Config,
            Error::Argument(_) => ErrorKind::Argument,
            Error::Checkpoint(_) | Error::EnsembleMismatch(_) => ErrorKind::Checkpoint,
            Error::EmptySequence(_) | Error::Diverged(_) => ErrorKind::Runtime,
        }
    }
}
