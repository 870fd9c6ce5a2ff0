use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("kinematics: {0}")]
    Kinematics(String),

    /// Jacobian condition number above the configured singularity threshold.
    #[error("near-singular Jacobian (condition number {condition:.3e})")]
    Singularity { condition: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("simulation aborted at step {step} (t = {t:.6} s): {source}")]
    Aborted {
        step: u64,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
