use thiserror::Error;

use crate::exponent::Exponent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-accessible truncation: {0}")]
    NonAccessible(String),
    #[error("valuation undetermined below {0}")]
    ValuationUndetermined(Exponent),
    #[error("{0}")]
    Domain(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid derivation spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("change of derivation not well defined: {0}")]
    IllDefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_rank(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::RankMismatch { left, right })
    }
}
