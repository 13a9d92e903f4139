use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors are split into input validation failures and guard-rail refusals
/// (instances too large for the requested method); see [`Error::is_guard`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported degree: k = {0}")]
    UnsupportedDegree(u32),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("key layout needs {needed} bits, only 128 are available")]
    KeyBudget { needed: u32 },

    #[error("oracle scale exceeded: {tuples} tuples > limit {limit}")]
    OracleScale { tuples: u128, limit: u128 },

    #[error("memory budget exceeded: estimated support {estimated} entries > budget {budget}")]
    MemoryBudget { estimated: u128, budget: u128 },

    #[error("quadrature resolution insufficient: {0}")]
    Quadrature(String),

    #[error("verification mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    /// True for budget and guard-rail errors, false for validation errors.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Error::KeyBudget { .. }
                | Error::OracleScale { .. }
                | Error::MemoryBudget { .. }
                | Error::Quadrature(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
