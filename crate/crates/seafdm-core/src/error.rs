//! Error type shared by all SE-AFDM modules.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the SE-AFDM baseband components.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid or inconsistent configuration parameters.
    Config(String),
    /// Mismatched vector or matrix dimensions.
    Dimension { expected: usize, got: usize },
    /// Malformed serialized data (wrong length or framing).
    Format(String),
    /// Serialized generator state decodes to an unreachable state.
    InvalidState(String),
    /// All-zero seed handed to an LFSR stream.
    InvalidSeed,
    /// Linear system is numerically rank deficient.
    NumericalRank,
    /// Sliding-window search found no frame header above threshold.
    FrameNotFound,
    /// Channel estimator found no path above the detection threshold.
    EmptyChannel,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::InvalidState(msg) => write!(f, "invalid generator state: {msg}"),
            Error::InvalidSeed => write!(f, "m-sequence seed must not be all zero"),
            Error::NumericalRank => write!(f, "linear system is numerically rank deficient"),
            Error::FrameNotFound => write!(f, "no frame header found above threshold"),
            Error::EmptyChannel => write!(f, "no channel path above detection threshold"),
        }
    }
}

impl std::error::Error for Error {}
