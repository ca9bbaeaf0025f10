use thiserror::Error;

/// Errors produced by the statistics, partitioning, audit and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("invalid critical values: {0}")]
    InvalidCriticals(String),

    #[error("need at least {needed} critical values, got {got}")]
    TooFewCriticals { needed: usize, got: usize },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("block {block:?} has no admissible split")]
    NoAdmissibleSplit { block: Vec<usize> },

    #[error("block of size {size} exceeds the all-pairwise enumeration cap of {cap}")]
    BlockTooLarge { size: usize, cap: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("ray leaves the data domain at grid point {index} (a = {a})")]
    DomainViolation { index: usize, a: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("unknown table row {row} for table {table}")]
    UnknownRow { table: u8, row: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("no data rows")]
    NoData,

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
