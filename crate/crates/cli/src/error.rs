use std::fmt;

use influence_core::Error as CoreError;

/// Failure class; each maps to a distinct process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Unreadable, malformed or invalid configuration (exit 2).
    Config,
    /// The requested quantity cannot be computed from the data (exit 3).
    Capability,
    /// A size or memory cap was hit (exit 4).
    Resource,
    /// Anything else (exit 1).
    Runtime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Runtime, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Runtime => 1,
            ErrorKind::Config => 2,
            ErrorKind::Capability => 3,
            ErrorKind::Resource => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::Capability(_) => ErrorKind::Capability,
            CoreError::ResourceCap(_) | CoreError::SizeCap { .. } => ErrorKind::Resource,
            CoreError::Internal(_) => ErrorKind::Runtime,
            CoreError::Validation(_)
            | CoreError::Dimension { .. }
            | CoreError::EmptySubset
            | CoreError::InvalidGate(_)
            | CoreError::InvalidArgument(_) => ErrorKind::Config,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::runtime(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::runtime(format!("json error: {e}"))
    }
}
