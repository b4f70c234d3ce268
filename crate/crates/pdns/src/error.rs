use thiserror::Error;

/// Errors surfaced by dataset construction, configuration and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: no interactions")]
    EmptyInput,

    #[error("config error: {0}")]
    Config(String),

    #[error("sampling error: no eligible negative items for user {user}")]
    NoEligibleNegatives { user: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("no eligible users for evaluation on split {0}")]
    NoEligibleUsers(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
