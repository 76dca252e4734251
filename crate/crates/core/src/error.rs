use thiserror::Error;

/// Errors raised by the optimization toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// The (geometry, feasible set, simple term) triple has no closed-form prox.
    #[error("unsupported prox combination: geometry={geometry}, set={set}, term={term}")]
    UnsupportedCombination {
        geometry: &'static str,
        set: &'static str,
        term: &'static str,
    },

    /// A solver configuration is inconsistent (stepsizes, budgets, missing constants).
    #[error("rejected configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
