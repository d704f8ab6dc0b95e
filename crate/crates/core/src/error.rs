//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed row in an input stream, with its 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An event token outside the closed vocabulary.
    #[error("unknown event type '{token}'")]
    UnknownEvent { token: String },

    /// Invalid configuration, rejected before any work is done.
    #[error("config error: {0}")]
    Config(String),

    /// Input data violates an operation's preconditions.
    #[error("data error: {0}")]
    Data(String),

    /// Labels contain a single class where both are required.
    #[error("single-class labels: {0}")]
    SingleClass(String),

    /// Unpenalized logistic fit diverged under separable data.
    #[error("perfect separation with l2 = 0; refit with l2 > 0")]
    Separation,

    /// An operation that requires a fitted model was called on an unfitted one.
    #[error("model state error: {0}")]
    Unfitted(&'static str),

    /// Prediction-time feature columns do not match the training schema.
    #[error("feature schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    SchemaMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
