use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A term or snapshot arrived out of order with respect to the running state.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("input too large: {what} = {got} exceeds {max}")]
    TooLarge { what: &'static str, got: u64, max: u64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
