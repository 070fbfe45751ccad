use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} exceeds cap: requested {requested}, limit {limit}")]
    CapExceeded {
        what: String,
        requested: String,
        limit: String,
    },

    #[error("point outside box: coordinate {axis} = {value} not in [-{radius}, {radius}]")]
    OutsideBox { axis: usize, value: f64, radius: f64 },

    #[error("epsilon outside validity range: requires {condition}")]
    ValidityRange { condition: String },

    #[error("input is not a member of the class: shell {shell} has norm {norm:e} > allowed {allowed:e}")]
    NonMember {
        shell: usize,
        norm: f64,
        allowed: f64,
    },

    #[error("shell sequence is not summable: {0}")]
    NonSummable(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("codebook hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error("codeword index {index} out of range for shell {shell} (size {size})")]
    IndexOutOfRange {
        shell: usize,
        index: usize,
        size: usize,
    },

    #[error("evaluator failed: {0}")]
    Evaluator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
