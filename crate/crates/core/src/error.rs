use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A function evaluation produced a non-finite value.
    #[error("non-finite value {value} when evaluating f at {at}")]
    NonFinite { at: f64, value: f64 },

    /// Division by zero, square root of a negative, and similar during expression evaluation.
    #[error("evaluation error at x = {at}: {reason}")]
    Evaluation { at: f64, reason: String },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    /// A series evaluation inside a report ran out of terms.
    #[error("series did not converge at x = {at} within {terms} terms")]
    NotConverged { at: f64, terms: usize },

    /// A parameter schedule or grid that cannot be used as configured.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
