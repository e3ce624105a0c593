use thiserror::Error;

use crate::cypher::ParseError;
use crate::hist::HistError;
use crate::model::{Gid, Timestamp};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("write conflict on object {0}; transaction aborted")]
    WriteConflict(Gid),
    #[error("edge endpoint {0} does not exist")]
    EndpointMissing(Gid),
    #[error("object {0} does not exist")]
    ObjectMissing(Gid),
    #[error("transaction is no longer active")]
    TxnNotActive,
    #[error("historical store: {0}")]
    Hist(#[from] HistError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("invalid time range: {t1} > {t2}")]
    InvalidRange { t1: Timestamp, t2: Timestamp },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::WriteConflict(_) => "write_conflict",
            Error::EndpointMissing(_) => "endpoint_missing",
            Error::ObjectMissing(_) => "object_missing",
            Error::TxnNotActive => "txn_not_active",
            Error::Hist(_) => "historical_store",
            Error::Parse(_) => "parse_error",
            Error::Eval(_) => "eval_error",
            Error::InvalidRange { .. } => "invalid_range",
            Error::Io(_) => "io_error",
        }
    }
}
