use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {found:?}: expected \"FSM1\" or a \"# fsm\" header")]
    BadMagic { found: Vec<u8> },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("expected a {expected} matrix, got {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("all off-diagonal distances are zero")]
    DegenerateDistances,
    #[error("negative distance at ({row}, {col})")]
    NegativeDistance { row: usize, col: usize },
    #[error("item id {id} out of range for n = {n}")]
    OutOfRange { id: usize, n: usize },
    #[error("duplicate node id {0}")]
    DuplicateNode(usize),
    #[error("ranked list is empty")]
    EmptyRanking,
    #[error("voting needs at least two features, got {0}")]
    TooFewFeatures(usize),
    #[error("relevant set is empty")]
    EmptyRelevant,
    #[error("N-S score needs a group of 4, got {0}")]
    GroupSize(usize),
    #[error("no values to aggregate")]
    EmptyAggregate,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed result record: {0}")]
    Record(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
