use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration invariant does not hold.
    #[error("configuration error: {0}")]
    Config(String),

    /// The input carries no usable information (all-zero map, empty frame).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Noise estimation could not produce an estimate.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A numerical routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed cube file.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
