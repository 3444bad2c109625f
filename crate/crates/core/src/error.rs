use thiserror::Error;

use crate::grid::Field;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("statistics refused: {0}")]
    Statistics(String),

    /// The integrator produced a non-finite value. `last_good` holds the
    /// state at `time`, the last step that was still finite.
    #[error("numerical abort at t = {time}: {reason}")]
    NumericalAbort {
        time: f64,
        reason: String,
        last_good: Option<Box<Field>>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
