//! Snapshot-isolation transaction bookkeeping: the logical clock, the table of
//! active transactions, and visibility between writers and readers.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;

use crate::model::{LogicalClock, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxnStatus {
    Active,
    Committed(Timestamp),
    Aborted,
}

/// Shared, externally observable state of one transaction.
///
/// Undo records and pending lifespan stamps point at this, so publishing the
/// commit timestamp here makes every effect of the transaction visible at once.
#[derive(Debug)]
pub struct TxnState {
    id: u64,
    start_ts: Timestamp,
    commit_ts: AtomicU64,
    aborted: AtomicBool,
}

impl TxnState {
    fn new(id: u64, start_ts: Timestamp) -> Self {
        TxnState {
            id,
            start_ts,
            commit_ts: AtomicU64::new(0),
            aborted: AtomicBool::new(false),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn start_ts(&self) -> Timestamp {
        self.start_ts
    }

    pub fn commit_ts(&self) -> Option<Timestamp> {
        match self.commit_ts.load(Ordering::Acquire) {
            0 => None,
            t => Some(Timestamp(t)),
        }
    }

    pub fn status(&self) -> TxnStatus {
        if let Some(t) = self.commit_ts() {
            TxnStatus::Committed(t)
        } else if self.aborted.load(Ordering::Acquire) {
            TxnStatus::Aborted
        } else {
            TxnStatus::Active
        }
    }

    /// Whether the effects of `writer` belong to this transaction's snapshot.
    pub fn sees(&self, writer: &TxnState) -> bool {
        writer.id == self.id || snapshot_visible(writer.commit_ts(), self)
    }
}

/// A committed version is visible iff it committed no later than the reader began.
pub fn snapshot_visible(version_commit_ts: Option<Timestamp>, reader: &TxnState) -> bool {
    version_commit_ts.is_some_and(|c| c <= reader.start_ts)
}

/// Allocates transaction timestamps and tracks the active set.
#[derive(Debug)]
pub struct TxnManager {
    clock: LogicalClock,
    next_id: AtomicU64,
    // Serializes start/commit timestamp publication so a reader never begins
    // between a commit timestamp being drawn and being published.
    ts_lock: Mutex<()>,
    active: Mutex<BTreeSet<(Timestamp, u64)>>,
}

impl TxnManager {
    pub fn new(clock_init: u64) -> Self {
        TxnManager {
            clock: LogicalClock::new(clock_init),
            next_id: AtomicU64::new(1),
            ts_lock: Mutex::new(()),
            active: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    pub fn begin(&self) -> Arc<TxnState> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let _guard = self.ts_lock.lock();
        let start = self.clock.next_commit_timestamp();
        self.active.lock().insert((start, id));
        Arc::new(TxnState::new(id, start))
    }

    /// Publishes a commit timestamp for `txn` and removes it from the active set.
    pub fn commit(&self, txn: &TxnState) -> Timestamp {
        debug_assert_eq!(txn.status(), TxnStatus::Active);
        let ts = {
            let _guard = self.ts_lock.lock();
            let ts = self.clock.next_commit_timestamp();
            txn.commit_ts.store(ts.0, Ordering::Release);
            ts
        };
        self.active.lock().remove(&(txn.start_ts, txn.id));
        ts
    }

    pub fn abort(&self, txn: &TxnState) {
        txn.aborted.store(true, Ordering::Release);
        self.active.lock().remove(&(txn.start_ts, txn.id));
    }

    /// Oldest start timestamp among active transactions, `+inf` when idle.
    ///
    /// Every active snapshot already includes transactions committed before
    /// the horizon, so the versions they superseded may be migrated.
    pub fn gc_horizon(&self) -> Timestamp {
        self.active
            .lock()
            .first()
            .map(|(ts, _)| *ts)
            .unwrap_or(Timestamp::INF)
    }

    pub fn active_count(&self) -> usize {
        self.active.lock().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn begin_draws_from_clock() {
        let mgr = TxnManager::new(7);
        let t = mgr.begin();
        assert_eq!(t.start_ts(), Timestamp(8));
        assert_eq!(t.status(), TxnStatus::Active);
        let u = mgr.begin();
        assert_ne!(t.id(), u.id());
        assert!(u.start_ts() > t.start_ts());
    }

    #[test]
    fn begin_after_commit_is_later() {
        let mgr = TxnManager::new(0);
        let a = mgr.begin();
        let c = mgr.commit(&a);
        let b = mgr.begin();
        assert!(b.start_ts() > c);
        assert_eq!(a.status(), TxnStatus::Committed(c));
    }

    #[test]
    fn visibility_rules() {
        let mgr = TxnManager::new(4);
        let writer = mgr.begin(); // 5
        let early = mgr.begin(); // 6
        let c = mgr.commit(&writer); // 7
        let late = mgr.begin(); // 8
        assert_eq!(c, Timestamp(7));
        assert!(!early.sees(&writer));
        assert!(late.sees(&writer));
        assert!(writer.sees(&writer));
        assert!(snapshot_visible(Some(Timestamp(5)), &late));
        assert!(!snapshot_visible(Some(Timestamp(9)), &late));
        assert!(!snapshot_visible(None, &late));
    }

    #[test]
    fn horizon_tracks_oldest_active() {
        let mgr = TxnManager::new(0);
        assert_eq!(mgr.gc_horizon(), Timestamp::INF);
        let a = mgr.begin();
        let b = mgr.begin();
        let c = mgr.begin();
        assert_eq!(mgr.gc_horizon(), a.start_ts());
        mgr.commit(&a);
        assert_eq!(mgr.gc_horizon(), b.start_ts());
        mgr.abort(&b);
        assert_eq!(mgr.gc_horizon(), c.start_ts());
        mgr.commit(&c);
        assert_eq!(mgr.gc_horizon(), Timestamp::INF);
        assert_eq!(b.status(), TxnStatus::Aborted);
    }
}
