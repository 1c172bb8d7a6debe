use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range before any computation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A numerical procedure failed to converge or produced an unusable state.
    #[error("solver failure: {0}")]
    Solver(String),
    /// Filesystem failure, annotated with the path involved.
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn solver(msg: impl Into<String>) -> Error {
    Error::Solver(msg.into())
}

pub(crate) fn io_at(path: impl std::fmt::Display, source: std::io::Error) -> Error {
    Error::Io { path: path.to_string(), source }
}
