use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("singular sub-block in Schur complement")]
    SingularBlock,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty truncation interval ({lower}, {upper})")]
    EmptyInterval { lower: f64, upper: f64 },

    #[error("G-Wishart completion did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("non-finite conditional mean at row {row}, column {col}")]
    NonFiniteConditional { row: usize, col: usize },

    #[error("corrupted precision matrix for edge ({i}, {j}): conditional variance {value:e} is not positive")]
    CorruptedPrecision { i: usize, j: usize, value: f64 },

    #[error("all birth/death rates underflowed (log total rate {log_total}, {edges} edges)")]
    ZeroTotalRate { log_total: f64, edges: usize },

    #[error("empty trace: no post-burn-in iterations recorded")]
    EmptyTrace,

    #[error("ROC curve undefined: {0}")]
    UndefinedRoc(&'static str),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("row {row}, column {col} ({name}): {message}")]
    Cell {
        row: usize,
        col: usize,
        name: String,
        message: String,
    },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
