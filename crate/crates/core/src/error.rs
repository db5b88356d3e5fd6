use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected} items, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("enumeration refused: {size} candidates exceed cap {cap}")]
    Refused { size: u128, cap: u128 },

    #[error("refusal budget exceeded: {refused} of {trials} trials refused")]
    RefusalBudget { refused: usize, trials: usize },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
