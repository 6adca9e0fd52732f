use std::path::PathBuf;

use thiserror::Error;

/// Structured failure of the SVC text parser. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvcError {
    #[error("empty input")]
    Empty,
    #[error("line 1: header `{token}` is not a point count")]
    BadHeader { token: String },
    #[error("line count mismatch: header declares {declared} points, found {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("line {line}: expected 7 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: non-numeric token `{token}`")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: negative pressure {value}")]
    NegativePressure { line: usize, value: i64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("signature has {len} samples, needs at least {min}")]
    SignalTooShort { len: usize, min: usize },
    #[error("pressure must be non-negative (sample {index}: {value})")]
    NegativePressure { index: usize, value: f64 },
    #[error("cannot stack {rows} rows into frames of {frames}")]
    NoFrames { rows: usize, frames: usize },
    #[error("channel `{0}` is not present in the feature matrix")]
    MissingChannel(String),
    #[error("duplicate column `{0}` in feature matrix")]
    DuplicateColumn(String),
    #[error("channel mismatch: expected [{expected}], found [{found}]")]
    ChannelMismatch { expected: String, found: String },
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{set}: {available} training vectors cannot fill a codebook of {needed}")]
    NotEnoughVectors {
        set: String,
        needed: usize,
        available: usize,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("alpha {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("alpha {0} needs a second score but the split has no set2")]
    AlphaNeedsSet2(f64),
    #[error("model was trained for split {model} but scored with {test}")]
    SplitMismatch { model: String, test: String },
    #[error("models mix matcher engines")]
    EngineMismatch,
    #[error("{path}: {source}")]
    Svc {
        path: String,
        #[source]
        source: SvcError,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("dataset validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("no users found")]
    NoUsers,
    #[error("user {user}: {have} genuine signatures, protocol needs at least {need}")]
    InsufficientSignatures {
        user: String,
        have: usize,
        need: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("report: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the pipeline stage this error belongs to, used to prefix CLI messages.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            SignalTooShort { .. } | NegativePressure { .. } | NoFrames { .. } => "signal_core",
            MissingChannel(_) | DuplicateColumn(_) | ChannelMismatch { .. } | Shape(_) => {
                "signal_core"
            }
            NotEnoughVectors { .. } => "vq_engine",
            AlphaOutOfRange(_) | AlphaNeedsSet2(_) | Empty(_) | Report(_) => "fusion_eval",
            SplitMismatch { .. } | EngineMismatch => "fusion_eval",
            InvalidConfig(_) => "config",
            Svc { .. } | Parse { .. } | Validation(_) | NoUsers | InsufficientSignatures { .. } => {
                "dataset_io"
            }
            Io { .. } | Json(_) | Csv(_) => "dataset_io",
        }
    }

    /// True for errors caused by input data rather than by a bug or the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
