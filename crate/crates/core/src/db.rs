//! Database facade: transactions over the current store, migration into the
//! historical store, and merged version reads across both.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::ops::Deref;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;

use crate::counters::ReadCounters;
use crate::error::{Error, Result};
use crate::hist::{AnchorPolicy, HistoricalStore, Segment};
use crate::migrate::{self, GcHandle, GcReport};
use crate::model::{legal_check, Gid, LabelSet, Lifespan, PropertyMap, TimeCondition, Timestamp};
use crate::state::Part;
use crate::storage::checkpoint::{self, Checkpoint, CheckpointObject};
use crate::storage::{CurrentStore, ObjRef, Object, ObjectKind, SeenVersion, Touched, WriteCtx};
use crate::txn::{TxnManager, TxnState};

const CHECKPOINT_FILE: &str = "current.checkpoint";

/// When superseded versions are migrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcMode {
    /// Only on explicit [`Database::gc`] calls.
    Off,
    /// Synchronously after every commit.
    EveryCommit,
    /// On a background thread.
    Interval(Duration),
}

#[derive(Debug, Clone)]
pub struct DbConfig {
    pub policy: AnchorPolicy,
    pub gc: GcMode,
    /// History that ended more than this many clock units ago is purged
    /// during collection. `None` or `Some(0)` keeps everything.
    pub retention_ms: Option<u64>,
    /// fsync every historical batch.
    pub sync: bool,
}

impl Default for DbConfig {
    fn default() -> Self {
        DbConfig {
            policy: AnchorPolicy::default(),
            gc: GcMode::Interval(Duration::from_millis(100)),
            retention_ms: None,
            sync: false,
        }
    }
}

/// Totals over every collection pass.
#[derive(Debug, Clone, Default)]
pub struct GcTotals {
    pub runs: u64,
    pub report: GcReport,
    pub last_error: Option<String>,
}

/// Where a version was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Current,
    Historical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartVersion {
    pub version: SeenVersion,
    pub origin: Origin,
}

pub struct Database {
    pub(crate) txns: TxnManager,
    pub(crate) current: CurrentStore,
    pub(crate) hist: HistoricalStore,
    /// Objects touched by committed transactions, by commit timestamp.
    pub(crate) reclaim: Mutex<BTreeMap<Timestamp, Vec<ObjRef>>>,
    pub(crate) gc_lock: Mutex<()>,
    pub(crate) config: DbConfig,
    gc_totals: Mutex<GcTotals>,
    gc_thread: Mutex<Option<GcHandle>>,
    dir: Option<PathBuf>,
}

impl Database {
    pub fn in_memory(config: DbConfig) -> Result<Arc<Database>> {
        let hist = HistoricalStore::in_memory(config.policy)?;
        Self::assemble(hist, None, config)
    }

    /// Opens a database persisting history (and, on clean shutdown, the
    /// current state) under `dir`.
    pub fn open(dir: &Path, config: DbConfig) -> Result<Arc<Database>> {
        let hist = HistoricalStore::open(dir, config.policy, config.sync)?;
        Self::assemble(hist, Some(dir.to_path_buf()), config)
    }

    fn assemble(hist: HistoricalStore, dir: Option<PathBuf>, config: DbConfig) -> Result<Arc<Database>> {
        let (mut clock, max_gid) = hist.maxima();
        let mut next_gid = max_gid.map_or(1, |g| g.0 + 1);
        let cp = match &dir {
            Some(d) => checkpoint::read(&d.join(CHECKPOINT_FILE))?,
            None => None,
        };
        let current = CurrentStore::new(next_gid);
        if let Some(cp) = cp {
            clock = clock.max(cp.clock);
            next_gid = next_gid.max(cp.next_gid);
            for o in cp.objects {
                current.restore(Object::restored(o.gid, o.kind, o.main, o.adj));
            }
            current.restore_next_gid(next_gid);
        }
        if hist.stats().entries() > 0 {
            current.mark_index_partial();
        }
        let db = Arc::new(Database {
            txns: TxnManager::new(clock.0),
            current,
            hist,
            reclaim: Mutex::new(BTreeMap::new()),
            gc_lock: Mutex::new(()),
            config,
            gc_totals: Mutex::new(GcTotals::default()),
            gc_thread: Mutex::new(None),
            dir,
        });
        if let GcMode::Interval(every) = db.config.gc {
            let handle = GcHandle::spawn(Arc::downgrade(&db), every)?;
            *db.gc_thread.lock() = Some(handle);
        }
        Ok(db)
    }

    pub fn config(&self) -> &DbConfig {
        &self.config
    }

    pub fn current(&self) -> &CurrentStore {
        &self.current
    }

    pub fn hist(&self) -> &HistoricalStore {
        &self.hist
    }

    pub fn txn_manager(&self) -> &TxnManager {
        &self.txns
    }

    /// The latest issued timestamp.
    pub fn now(&self) -> Timestamp {
        self.txns.clock().now()
    }

    pub fn begin(&self) -> Transaction<'_> {
        Transaction {
            db: self,
            state: self.txns.begin(),
            touched: Touched::default(),
            finished: false,
        }
    }

    /// A read-only snapshot, released on drop.
    pub fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            db: self,
            state: self.txns.begin(),
        }
    }

    /// Runs one migration pass now.
    pub fn gc(&self) -> Result<GcReport> {
        let r = migrate::collect_and_migrate(self);
        if let Err(e) = &r {
            self.gc_totals.lock().last_error = Some(e.to_string());
        }
        r
    }

    pub(crate) fn record_gc(&self, report: GcReport) {
        let mut t = self.gc_totals.lock();
        t.runs += 1;
        t.report += report;
    }

    pub fn gc_totals(&self) -> GcTotals {
        self.gc_totals.lock().clone()
    }

    /// Stops the background collector, if any.
    pub fn stop_background_gc(&self) {
        if let Some(mut h) = self.gc_thread.lock().take() {
            h.stop();
        }
    }

    /// Undo records currently linked in chains.
    pub fn unreclaimed_records(&self) -> usize {
        self.current
            .vertex_refs()
            .into_iter()
            .chain(self.current.edge_refs())
            .map(|o| o.read().chain.len())
            .sum()
    }

    /// Migrates everything and writes the current state to the store
    /// directory. Requires that no transaction is active.
    pub fn checkpoint(&self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        if self.txns.active_count() > 0 {
            return Err(Error::Eval("checkpoint needs a quiescent database".into()));
        }
        self.gc()?;
        let mut objects = Vec::new();
        for obj in self.current.vertex_refs().into_iter().chain(self.current.edge_refs()) {
            let o = obj.read();
            let Some(parts) = o.committed_parts() else {
                return Err(Error::Eval("checkpoint raced with a writer".into()));
            };
            let mut main = None;
            let mut adj = None;
            for (part, st, s) in parts {
                if part == Part::Ve {
                    adj = Some((st, s.clone()));
                } else {
                    main = Some((st, s.clone()));
                }
            }
            // Dead objects live on in history only.
            if let Some(main) = main {
                objects.push(CheckpointObject {
                    gid: o.gid,
                    kind: o.kind,
                    main,
                    adj,
                });
            }
        }
        let cp = Checkpoint {
            clock: self.now(),
            next_gid: self.current.next_gid(),
            objects,
        };
        checkpoint::write(&dir.join(CHECKPOINT_FILE), &cp)?;
        Ok(())
    }

    /// Versions of one object part visible to `reader`, in start order.
    ///
    /// Without a condition only the snapshot's current version is returned
    /// and the historical store is not consulted. With one, versions legal
    /// in the condition are gathered from the undo chain and the historical
    /// store; a version present in both keeps the current-store copy.
    pub fn part_versions(
        &self,
        reader: &TxnState,
        gid: Gid,
        part: Part,
        cond: Option<TimeCondition>,
        counters: &mut ReadCounters,
    ) -> Result<Vec<PartVersion>> {
        let obj = match part {
            Part::Vp | Part::Ve => self.current.vertex(gid),
            Part::Ep => self.current.edge(gid),
        };
        let Some(cond) = cond else {
            let Some(obj) = obj else { return Ok(Vec::new()) };
            let vs = obj.read().versions(part, reader, true, &mut counters.chain_steps);
            return Ok(vs
                .into_iter()
                .map(|version| PartVersion {
                    version,
                    origin: Origin::Current,
                })
                .collect());
        };
        let Some(cond) = self.clamp(cond) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        let mut oldest = Timestamp::INF;
        if let Some(obj) = obj {
            let vs = obj.read().versions(part, reader, false, &mut counters.chain_steps);
            for v in vs {
                oldest = oldest.min(v.lifespan.st);
                if legal_check(v.lifespan, cond) {
                    out.push(PartVersion {
                        version: v,
                        origin: Origin::Current,
                    });
                }
            }
        }
        // Anything legal in the window is still linked in the chain.
        if oldest > cond.t1 {
            let hist = self
                .hist
                .read()
                .fetch(Segment::of(part), gid, cond, counters)?;
            for (lifespan, state) in hist {
                if !snapshot_contains(reader, lifespan) {
                    continue;
                }
                out.push(PartVersion {
                    version: SeenVersion { lifespan, state },
                    origin: Origin::Historical,
                });
            }
        }
        Ok(dedup(out))
    }

    /// Applies the purge horizon: history before it is gone, so windows are
    /// cut to start there.
    fn clamp(&self, cond: TimeCondition) -> Option<TimeCondition> {
        let h = self.hist.purge_horizon();
        TimeCondition::new(cond.t1.max(h), cond.t2)
    }

    /// Vertex ids a temporal scan must consider: current records plus
    /// vertices known only from history.
    pub fn vertex_gids_with_history(&self) -> Vec<Gid> {
        let mut gids: BTreeSet<Gid> = self
            .current
            .vertex_refs()
            .iter()
            .map(|o| o.read().gid)
            .collect();
        gids.extend(self.hist.vertex_gids());
        gids.into_iter().collect()
    }

    /// Hash over the complete visible history of every object. Unaffected by
    /// migration; changes whenever a committed write adds a version.
    pub fn state_digest(&self) -> Result<u64> {
        let snap = self.snapshot();
        let mut gids: BTreeMap<Gid, Vec<Part>> = BTreeMap::new();
        for o in self.current.vertex_refs() {
            gids.insert(o.read().gid, vec![Part::Vp, Part::Ve]);
        }
        for o in self.current.edge_refs() {
            gids.insert(o.read().gid, vec![Part::Ep]);
        }
        for (k, _) in self.hist.read().entries()? {
            let parts = gids.entry(k.gid).or_default();
            if !parts.contains(&k.segment.part()) {
                parts.push(k.segment.part());
            }
        }
        let everything = TimeCondition::new(Timestamp::NEG_INF, Timestamp::INF).unwrap();
        let mut h = DefaultHasher::new();
        let mut c = ReadCounters::default();
        for (gid, mut parts) in gids {
            parts.sort();
            for part in parts {
                let vs = self.part_versions(&snap, gid, part, Some(everything), &mut c)?;
                if vs.is_empty() {
                    continue;
                }
                (gid, part).hash(&mut h);
                for v in vs {
                    v.version.lifespan.hash(&mut h);
                    format!("{:?}", v.version.state).hash(&mut h);
                }
            }
        }
        Ok(h.finish())
    }
}

impl Drop for Database {
    fn drop(&mut self) {
        self.stop_background_gc();
        if self.dir.is_some() {
            let _ = self.checkpoint();
        }
    }
}

/// A historical version belongs to `reader`'s snapshot when it ended no
/// later than the reader began.
fn snapshot_contains(reader: &TxnState, lifespan: Lifespan) -> bool {
    lifespan.ed <= reader.start_ts()
}

/// Drops repeated `(start)` versions of one part, keeping the current-store
/// copy, and sorts by start.
pub fn dedup(mut vs: Vec<PartVersion>) -> Vec<PartVersion> {
    vs.sort_by_key(|v| (v.version.lifespan.st, v.origin));
    vs.dedup_by_key(|v| v.version.lifespan);
    vs
}

/// A read-only snapshot; ends when dropped.
pub struct Snapshot<'db> {
    db: &'db Database,
    state: Arc<TxnState>,
}

impl Deref for Snapshot<'_> {
    type Target = TxnState;

    fn deref(&self) -> &TxnState {
        &self.state
    }
}

impl Drop for Snapshot<'_> {
    fn drop(&mut self) {
        self.db.txns.abort(&self.state);
    }
}

/// A read-write transaction. Any failed write rolls the whole transaction
/// back; later calls then fail with [`Error::TxnNotActive`]. Dropping an
/// unfinished transaction aborts it.
pub struct Transaction<'db> {
    db: &'db Database,
    state: Arc<TxnState>,
    touched: Touched,
    finished: bool,
}

impl<'db> Transaction<'db> {
    pub fn state(&self) -> &Arc<TxnState> {
        &self.state
    }

    pub fn start_ts(&self) -> Timestamp {
        self.state.start_ts()
    }

    pub fn db(&self) -> &'db Database {
        self.db
    }

    fn write<T>(&mut self, f: impl FnOnce(&CurrentStore, &mut WriteCtx<'_>) -> Result<T>) -> Result<T> {
        if self.finished {
            return Err(Error::TxnNotActive);
        }
        let mut w = WriteCtx {
            txn: &self.state,
            touched: &mut self.touched,
        };
        let r = f(&self.db.current, &mut w);
        if r.is_err() {
            self.rollback();
        }
        r
    }

    pub fn create_vertex(&mut self, labels: LabelSet, props: PropertyMap) -> Result<Gid> {
        self.write(|s, w| Ok(s.create_vertex(w, labels, props)))
    }

    pub fn create_edge(&mut self, src: Gid, dst: Gid, edge_type: &str, props: PropertyMap) -> Result<Gid> {
        self.write(|s, w| s.create_edge(w, src, dst, edge_type.to_string(), props))
    }

    /// Sets properties on a vertex or edge; a null value removes the key.
    pub fn set_properties(&mut self, gid: Gid, changes: PropertyMap) -> Result<()> {
        self.write(|s, w| s.update_properties(w, gid, changes))
    }

    /// Deletes a vertex and every edge attached to it.
    pub fn delete_vertex(&mut self, gid: Gid) -> Result<()> {
        self.write(|s, w| s.delete_vertex(w, gid))
    }

    pub fn delete_edge(&mut self, gid: Gid) -> Result<()> {
        self.write(|s, w| s.delete_edge(w, gid))
    }

    /// Whether `gid` names a vertex or edge record (live or not).
    pub fn kind_of(&self, gid: Gid) -> Option<ObjectKind> {
        self.db.current.object(gid).map(|o| o.read().kind)
    }

    pub fn commit(mut self) -> Result<Timestamp> {
        if self.finished {
            return Err(Error::TxnNotActive);
        }
        self.finished = true;
        let ts = self.db.txns.commit(&self.state);
        let touched = std::mem::take(&mut self.touched).into_objects();
        if touched.is_empty() {
            return Ok(ts);
        }
        for obj in &touched {
            obj.write().stamp_commit(&self.state, ts);
        }
        self.db.reclaim.lock().entry(ts).or_default().extend(touched);
        if self.db.config.gc == GcMode::EveryCommit {
            self.db.gc()?;
        }
        Ok(ts)
    }

    pub fn abort(mut self) {
        self.rollback();
    }

    pub(crate) fn rollback(&mut self) {
        if self.finished {
            return;
        }
        self.finished = true;
        for obj in std::mem::take(&mut self.touched).into_objects() {
            let mut o = obj.write();
            if !o.rollback(&self.state) {
                let gid = o.gid;
                drop(o);
                self.db.current.remove_object(gid);
            }
        }
        self.db.txns.abort(&self.state);
    }
}

impl Drop for Transaction<'_> {
    fn drop(&mut self) {
        self.rollback();
    }
}
