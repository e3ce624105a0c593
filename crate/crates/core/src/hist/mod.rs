//! Historical store: anchors and deltas of migrated versions in an ordered
//! key-value space.

pub mod codec;
pub mod key;
pub mod kv;
pub mod policy;
pub mod store;

use thiserror::Error;

use crate::model::{Gid, Timestamp};

pub use codec::Payload;
pub use key::{HistKey, Kind, Segment, KEY_LEN};
pub use kv::{BatchOp, LogKv, OrderedKv};
pub use policy::AnchorPolicy;
pub use store::{HistBatch, HistReader, HistStats, HistoricalStore, PurgeReport};

#[derive(Debug, Error)]
pub enum HistError {
    #[error("malformed key: {0}")]
    MalformedKey(String),
    #[error("malformed value: {0}")]
    MalformedValue(String),
    #[error("version of {segment:?} {gid} starting at {st} precedes the last migrated end {last_ed}")]
    OutOfOrder {
        segment: Segment,
        gid: Gid,
        st: Timestamp,
        last_ed: Timestamp,
    },
    #[error("broken delta chain for {segment:?} {gid}: {detail}")]
    CorruptChain {
        segment: Segment,
        gid: Gid,
        detail: String,
    },
    #[error("invalid anchor policy: {0}")]
    InvalidPolicy(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
