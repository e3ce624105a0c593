//! Garbage collection: moving superseded versions out of undo chains into
//! the historical store.

use std::collections::BTreeMap;
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::Weak;
use std::thread::{self, JoinHandle, ThreadId};
use std::time::Duration;

use crate::db::Database;
use crate::error::Result;
use crate::hist::Segment;
use crate::model::{Gid, Lifespan, Timestamp};
use crate::state::{Part, PartState};
use crate::storage::{Object, ObjRef, ObjectKind, UndoAction};

/// Outcome of one collection pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GcReport {
    pub horizon: Timestamp,
    pub txns_reclaimed: u64,
    pub objects_visited: u64,
    pub versions_migrated: u64,
    pub anchors: u64,
    pub deltas: u64,
    pub records_unlinked: u64,
    pub purged: u64,
}

impl std::ops::AddAssign for GcReport {
    fn add_assign(&mut self, o: Self) {
        self.horizon = self.horizon.max(o.horizon);
        self.txns_reclaimed += o.txns_reclaimed;
        self.objects_visited += o.objects_visited;
        self.versions_migrated += o.versions_migrated;
        self.anchors += o.anchors;
        self.deltas += o.deltas;
        self.records_unlinked += o.records_unlinked;
        self.purged += o.purged;
    }
}

/// A historical version staged for migration.
pub(crate) struct Staged {
    pub part: Part,
    pub lifespan: Lifespan,
    pub state: PartState,
}

/// Versions of `obj` superseded before `horizon`, oldest first per part, and
/// the number of undo records (counted from the chain's tail) they came from.
pub(crate) fn reclaimable(obj: &Object, horizon: Timestamp) -> (Vec<Staged>, usize) {
    let n = obj
        .chain
        .iter()
        .rev()
        .take_while(|u| u.txn.commit_ts().is_some_and(|t| t < horizon))
        .count();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let first = obj.chain.len() - n;
    let parts: &[Part] = match obj.kind {
        ObjectKind::Vertex => &[Part::Vp, Part::Ve],
        ObjectKind::Edge { .. } => &[Part::Ep],
    };
    let mut out = Vec::new();
    for &part in parts {
        let mut state = obj.slot(part).and_then(|s| s.state.clone());
        let mut versions = Vec::new();
        for (i, u) in obj.chain.iter().enumerate() {
            if let UndoAction::Created = u.action {
                break;
            }
            if u.part != part {
                continue;
            }
            u.revert(&mut state);
            if i >= first {
                let (Some(lifespan), Some(s)) = (u.lifespan(), &state) else {
                    continue;
                };
                versions.push(Staged {
                    part,
                    lifespan,
                    state: s.clone(),
                });
            }
        }
        versions.reverse();
        out.extend(versions);
    }
    (out, n)
}

/// One collection pass: migrates every version superseded by a transaction
/// that committed before the oldest active snapshot, then purges history
/// older than the retention window.
pub(crate) fn collect_and_migrate(db: &Database) -> Result<GcReport> {
    let _gc = db.gc_lock.lock();
    let horizon = db.txns.gc_horizon();
    let mut report = GcReport {
        horizon,
        ..Default::default()
    };

    let ready = {
        let mut queue = db.reclaim.lock();
        let keep = queue.split_off(&horizon);
        std::mem::replace(&mut *queue, keep)
    };
    report.txns_reclaimed = ready.len() as u64;
    if let Err(e) = migrate_ready(db, &ready, horizon, &mut report) {
        // Nothing was unlinked; retry these transactions next pass.
        let mut queue = db.reclaim.lock();
        for (ts, objs) in ready {
            queue.entry(ts).or_default().extend(objs);
        }
        return Err(e);
    }

    if let Some(retention) = db.config.retention_ms.filter(|r| *r > 0) {
        let now = db.txns.clock().now();
        let cutoff = Timestamp(now.0.saturating_sub(retention));
        if cutoff > db.hist.purge_horizon() {
            report.purged = db.hist.purge(cutoff)?.removed;
        }
    }
    db.record_gc(report);
    Ok(report)
}

fn migrate_ready(
    db: &Database,
    ready: &BTreeMap<Timestamp, Vec<ObjRef>>,
    horizon: Timestamp,
    report: &mut GcReport,
) -> Result<()> {
    let mut objects: Vec<(Gid, &ObjRef)> = ready
        .values()
        .flatten()
        .map(|o| (o.read().gid, o))
        .collect();
    objects.sort_by_key(|(g, _)| *g);
    objects.dedup_by_key(|(g, _)| *g);
    report.objects_visited = objects.len() as u64;

    let mut batch = db.hist.begin_batch();
    let mut unlink = Vec::new();
    for (gid, obj) in objects {
        let (staged, n) = reclaimable(&obj.read(), horizon);
        for s in staged {
            db.hist
                .put_version(&mut batch, Segment::of(s.part), gid, s.lifespan, &s.state)?;
            report.versions_migrated += 1;
        }
        if n > 0 {
            unlink.push((obj, n));
        }
    }
    report.anchors = batch.anchors();
    report.deltas = batch.deltas();
    // Write before unlinking so a reader always finds each version in at
    // least one of the two stores.
    db.hist.commit_batch(batch)?;
    for (obj, n) in unlink {
        let mut o = obj.write();
        for _ in 0..n {
            let u = o.chain.pop_back().expect("reclaimed records are still linked");
            debug_assert!(u.txn.commit_ts().is_some_and(|t| t < horizon));
        }
        report.records_unlinked += n as u64;
    }
    Ok(())
}

/// Periodic collection on a background thread.
pub struct GcHandle {
    stop: Option<Sender<()>>,
    thread: Option<JoinHandle<()>>,
    thread_id: ThreadId,
}

impl GcHandle {
    pub(crate) fn spawn(db: Weak<Database>, every: Duration) -> std::io::Result<GcHandle> {
        let (tx, rx) = mpsc::channel::<()>();
        let thread = thread::Builder::new()
            .name("tempograph-gc".into())
            .spawn(move || loop {
                match rx.recv_timeout(every) {
                    Err(RecvTimeoutError::Timeout) => {
                        let Some(db) = db.upgrade() else { break };
                        // Failures are recorded in the database's GC stats.
                        let _ = db.gc();
                    }
                    _ => break,
                }
            })?;
        Ok(GcHandle {
            stop: Some(tx),
            thread_id: thread.thread().id(),
            thread: Some(thread),
        })
    }

    /// Signals the thread and waits for an in-flight pass to finish.
    pub fn stop(&mut self) {
        self.stop.take();
        if let Some(t) = self.thread.take() {
            if thread::current().id() != self.thread_id {
                let _ = t.join();
            }
        }
    }
}

impl Drop for GcHandle {
    fn drop(&mut self) {
        self.stop();
    }
}
