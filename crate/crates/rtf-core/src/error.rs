use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a nonempty point set")]
    EmptyPointSet,

    #[error(
        "rejection sampler exceeded {0} iterations; the polytope is numerically \
         degenerate (near-coincident points or extreme weight skew)"
    )]
    RejectionCapExceeded(u64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("label column {0:?} not found in CSV header")]
    MissingLabelColumn(String),

    #[error("non-numeric predictor value {value:?} at data row {row}, column {column:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite predictor value at data row {row}, column {column:?}")]
    NonFiniteCell { row: usize, column: String },

    #[error("column {0:?} is constant on the training rows and cannot be standardized")]
    ConstantColumn(String),

    #[error("unknown point index {0}")]
    UnknownIndex(usize),

    #[error("label count vectors disagree: parent counts must equal the sum of child counts")]
    CountMismatch,

    #[error("Dirichlet hyperparameters must be strictly positive")]
    NonPositiveAlpha,

    #[error(
        "row {0} was not registered at fit time; test rows must be supplied when the \
         forest is fitted so they can be augmented into the training run"
    )]
    UnregisteredRow(usize),

    #[error("malformed cut log at line {line}: {reason}")]
    MalformedCutLog { line: usize, reason: String },

    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;
