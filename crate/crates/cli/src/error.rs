use std::fmt;

use lfsc::Error;

/// Process exit codes.
pub mod exit {
    pub const OTHER: u8 = 1;
    pub const UNSUPPORTED: u8 = 2;
    pub const MODEL: u8 = 3;
    pub const SPEC_MISMATCH: u8 = 4;
    pub const CORRUPT: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, code: u8, message: impl Into<String>) -> Self {
        // diagnostics must stay on one line
        let message = message.into().split_whitespace().collect::<Vec<_>>().join(" ");
        Self { kind, code, message }
    }

    pub fn unsupported(message: impl Into<String>) -> Self {
        Self::new("unsupported-input", exit::UNSUPPORTED, message)
    }

    pub fn spec_mismatch(message: impl Into<String>) -> Self {
        Self::new("spec-mismatch", exit::SPEC_MISMATCH, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", exit::OTHER, message)
    }

    pub fn io(path: &str, err: impl fmt::Display) -> Self {
        Self::new("io", exit::OTHER, format!("{path}: {err}"))
    }

    /// Any failure to read or validate a weight file.
    pub fn model(path: &str, err: Error) -> Self {
        Self::new("model", exit::MODEL, format!("cannot load model {path}: {err}"))
    }

    /// Failures while parsing a `.lfsc` stream.
    pub fn stream(path: &str, err: Error) -> Self {
        match err {
            Error::Format(m) => Self::new("unknown-format", exit::UNSUPPORTED, format!("{path}: {m}")),
            Error::Io(e) => Self::io(path, e),
            e => Self::new("corrupt", exit::CORRUPT, format!("{path}: {e}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lfsc: error[{}]: {}", self.kind, self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::UnsupportedRate { .. } | Error::UnsupportedLayout(_) | Error::InvalidInput(_) | Error::Shape(_) => {
                Self::unsupported(err.to_string())
            }
            Error::InvalidCode(_) => Self::spec_mismatch(err.to_string()),
            Error::Truncated(_) | Error::Corrupt(_) | Error::Checksum { .. } => {
                Self::new("corrupt", exit::CORRUPT, err.to_string())
            }
            e => Self::new("internal", exit::OTHER, e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
