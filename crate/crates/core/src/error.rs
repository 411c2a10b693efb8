use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: truncated record {record} at byte offset {offset}")]
    TruncatedRecord { path: PathBuf, record: usize, offset: u64 },

    #[error("{path}: record {record} at byte offset {offset} has dimension {found}, expected {expected}")]
    InconsistentDim { path: PathBuf, record: usize, offset: u64, expected: usize, found: usize },

    #[error("{path}: invalid dimension header {found} in record {record} at byte offset {offset}")]
    InvalidDimHeader { path: PathBuf, record: usize, offset: u64, found: i32 },

    #[error("{path}: file contains zero records")]
    ZeroRecords { path: PathBuf },

    #[error("{path}: non-finite value in record {record} at byte offset {offset}")]
    NonFinite { path: PathBuf, record: usize, offset: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad file format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
