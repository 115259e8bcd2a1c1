use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),

    #[error("gain |eta| = {0} exceeds the stable bound 0.02 rad")]
    GainOutOfRange(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
