use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants mirror how a caller is expected to react: argument errors are
/// bad input, capacity errors mean "use a different mode or a smaller
/// instance", generation/construction errors come from randomised or
/// combinatorial builders that could not satisfy their contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("construction infeasible: {0}")]
    Construction(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
