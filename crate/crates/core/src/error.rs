use thiserror::Error;

/// Errors surfaced by the memory engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("unknown memory id {0}")]
    UnknownMemory(i64),

    #[error("store is busy (another writer holds the lock)")]
    Busy,

    #[error("storage error: {0}")]
    Storage(String),

    #[error("remote adapter error: {0}")]
    Remote(String),

    #[error("embedding lookup miss for text: {0:?}")]
    PrecomputedMiss(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<rusqlite::Error> for Error {
    fn from(e: rusqlite::Error) -> Self {
        if let rusqlite::Error::SqliteFailure(code, _) = &e {
            if code.code == rusqlite::ErrorCode::DatabaseBusy
                || code.code == rusqlite::ErrorCode::DatabaseLocked
            {
                return Error::Busy;
            }
        }
        Error::Storage(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
