//! Embedded temporal property graph engine.
//!
//! Current versions live in an in-memory multi-version store; superseded
//! versions are migrated asynchronously into an ordered key-value store as
//! anchors and deltas. A temporal Cypher dialect reads both.

pub mod counters;
pub mod cypher;
pub mod db;
pub mod error;
pub mod exec;
pub mod hist;
pub mod migrate;
pub mod model;
pub mod state;
pub mod storage;
pub mod txn;

pub use counters::ReadCounters;
pub use db::{Database, DbConfig, GcMode, Snapshot, Transaction};
pub use hist::AnchorPolicy;
pub use migrate::GcReport;
pub use error::{Error, Result};
pub use exec::{Cell, ExecOptions, QueryResult};
pub use model::{Gid, Lifespan, TimeCondition, Timestamp, Value};
