use thiserror::Error;

/// Errors produced by the training, evaluation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A cell could not be parsed as a finite real. `row` is the 1-based data
    /// record number (the header, when present, is not counted).
    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    Parse { row: usize, column: String, value: String },

    #[error("row {row}, column {column}: missing value")]
    MissingValue { row: usize, column: String },

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("label column {0} not found")]
    LabelColumn(String),

    #[error("fewer than 2 classes")]
    TooFewClasses,

    #[error("dataset is already transformed ({0})")]
    AlreadyTransformed(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular value decomposition failed to converge")]
    SvdConvergence,

    #[error("non-finite objective at outer iteration {outer} (rho = {rho})")]
    NonFinite { outer: usize, rho: f64 },

    #[error("covariance repair failed: minimum eigenvalue {0}")]
    CovarianceRepair(f64),

    #[error("fit for class pair ({pos}, {neg}) failed: {source}")]
    Pair {
        pos: String,
        neg: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported model file version {0}")]
    ModelVersion(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
