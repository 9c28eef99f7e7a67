//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("row {row}, column `{column}`: non-finite numeric value `{value}`")]
    NumericOverflow {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: empty cell in numeric column")]
    MissingValue { row: usize, column: String },
    #[error("record `{0}` has no disposition or hash key")]
    UnlabeledRecord(String),
    #[error("manifest schema violation: {0}")]
    SchemaViolation(String),
    #[error("invalid k: {0}")]
    InvalidK(String),
    #[error("invalid candidate k={0}: must satisfy 3 <= k <= n")]
    InvalidCandidate(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("cannot train on zero records")]
    DegenerateTraining,
    #[error("record does not match training schema: {0}")]
    SchemaMismatch(String),
    #[error("truth and prediction sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot score an empty sequence")]
    EmptyInput,
    #[error("holdout record `{0}` reached the evaluation path")]
    HoldoutLeak(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
