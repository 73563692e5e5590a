use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A prior, learner or experiment was configured with invalid values.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("action {action} out of range for {num_actions} actions")]
    ActionIndex { action: usize, num_actions: usize },
    /// Non-finite reward or otherwise unusable observation.
    #[error("invalid data: {0}")]
    Data(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
