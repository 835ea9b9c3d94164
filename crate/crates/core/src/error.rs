//! Error taxonomy shared across the workspace.
//!
//! `Data` covers malformed inputs and contract violations on data
//! (bad files, empty cohorts, degenerate prediction sets); `Numeric`
//! covers failures of the numerics themselves (divergent ODE state,
//! non-finite losses, singular information matrices). The CLI maps the
//! two classes to distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
