use thiserror::Error;

/// Errors raised by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A quadrature or closed form produced a non-finite or unconverged value.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// A root bracket could not be established within the representable range.
    #[error("range error: {0}")]
    Range(String),
    /// The requested combination of parameters is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A simulation hit one of its resource limits.
    #[error("simulation error: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
