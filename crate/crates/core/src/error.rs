use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("fewer than 2 classes (found {0})")]
    TooFewClasses(usize),
    #[error("label column '{0}' not found in header")]
    MissingLabelColumn(String),
    #[error("class {class} has {count} instances, fewer than the {folds} folds requested")]
    ClassTooSmall {
        class: usize,
        count: usize,
        folds: usize,
    },
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("empty {0} set")]
    EmptyView(&'static str),
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("missing results for nonconformity function {0}")]
    MissingNcf(String),
    #[error("results line {line}: {message}")]
    MalformedResults { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
