//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value or file violates an invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// A structured-text document failed to parse; the message names the
    /// offending key or line.
    #[error("parse: {0}")]
    Parse(String),

    /// Timesteps out of order (append-only structures).
    #[error("ordering: {0}")]
    Ordering(String),

    /// A filtration is internally inconsistent (e.g. a missing face).
    #[error("structural: {0}")]
    Structural(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code class for the CLI: validation/parse/ordering/structural
    /// problems are user-input errors, IO failures are runtime errors.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
