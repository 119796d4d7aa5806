use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a number")]
    NotNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dataset must have at least one row and one column (got {n}x{p})")]
    EmptyDataset { n: usize, p: usize },

    #[error("{len} values cannot be shaped into rows of width {p}")]
    ShapeMismatch { len: usize, p: usize },

    #[error("dimension mismatch: {left} vs {right} columns")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sample size mismatch: {left} vs {right} observations")]
    SampleSizeMismatch { left: usize, right: usize },

    #[error("{what} needs at least {required} observations, got {actual}")]
    TooFewObservations {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("need at least {required} datasets, got {actual}")]
    TooFewDatasets { required: usize, actual: usize },

    #[error("distance correlation is undefined: a dataset has zero distance variance")]
    UndefinedCorrelation,

    #[error("partial distance correlation is undefined: collinear conditioning variable")]
    CollinearConditioning,

    #[error("input must be sorted in ascending order (violated at index {index})")]
    Unsorted { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
