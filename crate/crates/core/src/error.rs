use thiserror::Error;

use crate::lm::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("context length {len} exceeds limit {limit}")]
    Length { len: usize, limit: usize },

    #[error("token {token} out of range for vocabulary of size {vocab_size}")]
    InvalidToken { token: TokenId, vocab_size: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("mock model construction failed: {0}")]
    MockModel(String),

    #[error("training data error: {0}")]
    TrainingData(String),

    #[error("fit quality error: {0}")]
    FitQuality(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistency(String),

    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("sandbox failure: {0}")]
    Sandbox(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
