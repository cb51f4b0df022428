use thiserror::Error;

/// Errors produced by the influence toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} on {n} qubits exceeds the dense-size cap of {cap} qubits")]
    SizeCap { what: &'static str, n: usize, cap: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("subset must be non-empty")]
    EmptySubset,

    #[error("invalid gate specification: {0}")]
    InvalidGate(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
