use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not supported: expected an odd integer n >= 3")]
    InvalidDimension(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A grid or quadrature interval fails to cover the region it must integrate over.
    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    DerivativeOrder { requested: usize, max: usize },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
