use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("block shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-positive complexity {value} for block {key}")]
    NonPositiveComplexity { key: String, value: f64 },

    #[error("block {key} is not in the CTM table")]
    MissingBlock { key: String },

    #[error("CTM table is incomplete: {present} of {expected} blocks")]
    IncompleteTable { present: usize, expected: usize },

    #[error("machine class too large: {reason}")]
    ClassTooLarge { reason: String },

    #[error("no machine halted within {max_steps} steps")]
    NoHalters { max_steps: u64 },

    #[error("input contains non-finite values")]
    NonFiniteInput,

    #[error("bit depth {0} outside 1..=16")]
    BitDepthOutOfRange(u32),

    #[error("retained planes k={k} outside 1..={q}")]
    KOutOfRange { k: u32, q: u32 },

    #[error("no complete {block:?} block fits a {rows}x{cols} matrix")]
    EmptyAfterDrop {
        rows: usize,
        cols: usize,
        block: (usize, usize),
    },

    #[error("baseline complexity must be positive, got {0}")]
    ZeroBaseline(f64),

    #[error("every layer was excluded")]
    AllLayersExcluded,

    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed tensor bundle: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },

    #[error("unsupported bundle version {0}")]
    UnsupportedVersion(u32),

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
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the environment rather than by the inputs.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
