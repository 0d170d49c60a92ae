use thiserror::Error;

/// Failure categories shared by every module. The CLI maps each category to
/// an exit code (input 2, numeric 3, policy 4).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("unsupported group family: {0}")]
    Capability(String),

    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("policy error: {0}")]
    Policy(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
