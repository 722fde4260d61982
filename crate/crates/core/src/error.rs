use thiserror::Error;

/// Errors raised across the benchmark pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("stale frame: timestamp {timestamp} is not after {current}")]
    StaleFrame { timestamp: f64, current: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
