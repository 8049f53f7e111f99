use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A distribution failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// No feasible point exists for the requested problem.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// A quantity underflowed or otherwise lost all precision.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
