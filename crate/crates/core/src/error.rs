use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {what} (residual {residual:e})")]
    NumericalFailure { what: String, residual: f64 },

    #[error("budget exceeded: {requested} words requested, budget is {budget}")]
    BudgetExceeded { requested: u128, budget: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("search failed: {0}")]
    SearchFailure(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
