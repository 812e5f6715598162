use thiserror::Error;

use crate::csa::AlgebraClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("context mismatch: {left} vs {right}")]
    ContextMismatch {
        left: AlgebraClass,
        right: AlgebraClass,
    },

    /// The operation is only defined on sums of Tate motives.
    #[error("expression is not split: {0}")]
    NotSplit(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
