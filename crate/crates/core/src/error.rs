use thiserror::Error;

/// Errors produced by the codec library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported sample rate {got} Hz (expected {expected} Hz)")]
    UnsupportedRate { got: u32, expected: u32 },
    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),
    #[error("length error: {0}")]
    Length(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("truncated: {0}")]
    Truncated(String),
    #[error("corrupt payload: {0}")]
    Corrupt(String),
    #[error("bandwidth undefined: {0}")]
    UndefinedBandwidth(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
