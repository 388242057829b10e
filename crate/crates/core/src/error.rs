use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input symbol {symbol} at position {position} is outside the alphabet of size {alphabet_size}")]
    DomainMismatch {
        symbol: u16,
        position: usize,
        alphabet_size: usize,
    },

    #[error("input of length {got} is outside the hypothesis domain (expected length {expected})")]
    LengthMismatch { expected: usize, got: usize },

    #[error("probability {value} at support index {index} is not in [0, 1]")]
    InvalidProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, which differs from 1 by more than {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("support entry {index} duplicates an earlier entry")]
    DuplicateSupport { index: usize },

    #[error("distribution support is empty")]
    EmptySupport,

    #[error("exact enumeration of {alphabet_size}^{length} inputs refused (maximum exact length is {max_length}); use Monte Carlo mode")]
    TooLargeForExact {
        alphabet_size: usize,
        length: usize,
        max_length: usize,
    },

    #[error("hypothesis class size overflows 64 bits: {0}")]
    SizeOverflow(String),

    #[error("exact-mode budget exceeded: {required} evaluations requested, budget is {budget}; use Monte Carlo mode")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("state {state} is reachable but not within {ell} steps of the initial state (depth {depth})")]
    NotConnected { state: u16, depth: usize, ell: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
