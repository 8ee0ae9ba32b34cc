use thiserror::Error;

/// Errors surfaced by the simulator, signal transformers, and trainer.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a structural contract (bad ids, shapes, ranges).
    #[error("specification error: {0}")]
    Spec(String),

    /// Training produced a non-finite quantity and was halted.
    #[error("training error: {0}")]
    Training(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub fn training(msg: impl Into<String>) -> Self {
        Error::Training(msg.into())
    }

    pub fn scenario(msg: impl Into<String>) -> Self {
        Error::Scenario(msg.into())
    }
}
