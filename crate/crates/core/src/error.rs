use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: zero-weight edge {u} {v} has no sign")]
    ZeroWeight { line: usize, u: String, v: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("privacy budget infeasible: {0}")]
    BudgetInfeasible(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
