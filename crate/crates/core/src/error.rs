use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter is outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The value exists mathematically but not for this input
    /// (inverse of zero, relative error of a zero tensor, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iteration failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// No admissible augmentation plan exists for the requested shape.
    #[error("augmentation planning failed: {0}")]
    Planning(String),

    /// A file could not be read or written.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file was read but its contents are not what the format promises.
    #[error("invalid data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
