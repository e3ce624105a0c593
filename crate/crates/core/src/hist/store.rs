//! Anchor+delta persistence of migrated versions.
//!
//! Versions of one `(segment, gid)` form a chain tiling time: each entry's
//! start equals its predecessor's end. An anchor stores the full state, a
//! delta the forward change from the previous version. Reading a window
//! seeks the latest anchor at or before its start and replays forward.

use std::collections::{BTreeSet, HashMap};
use std::ops::Bound;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::{Mutex, RwLock, RwLockReadGuard};

use super::codec::{self, Payload};
use super::key::{prefix, raw_key, HistKey, Kind, Segment, KEY_LEN};
use super::kv::{BatchOp, LogKv, OrderedKv};
use super::policy::AnchorPolicy;
use super::HistError;
use crate::counters::ReadCounters;
use crate::model::{legal_check, Gid, Lifespan, TimeCondition, Timestamp};
use crate::state::{PartDelta, PartState};

// Reserved keys live below every segment byte.
const PURGE_HORIZON_KEY: &[u8] = b"\x00purge_horizon";

/// Per-object bookkeeping for choosing anchors.
#[derive(Debug, Clone, Default)]
struct MigrationMeta {
    /// Versions migrated so far (`f`).
    migrated: u64,
    /// Deltas written since the most recent anchor.
    since_anchor: u64,
    last: Option<Lifespan>,
    /// State of `last`; rebuilt from the store when missing.
    last_state: Option<PartState>,
    /// Whether the entry for `last` is still stored (purge may drop it).
    has_base: bool,
}

/// Staged writes published together by [`HistoricalStore::commit_batch`].
///
/// Only one batch may be in flight at a time; migration holds a lock for that.
#[derive(Default)]
pub struct HistBatch {
    ops: Vec<BatchOp>,
    meta: HashMap<(Segment, Gid), MigrationMeta>,
    anchors: u64,
    deltas: u64,
}

impl HistBatch {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn anchors(&self) -> u64 {
        self.anchors
    }

    pub fn deltas(&self) -> u64 {
        self.deltas
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegmentStats {
    pub anchors: u64,
    pub deltas: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HistStats {
    pub anchors: u64,
    pub deltas: u64,
    /// Key plus value bytes of all entries.
    pub bytes: u64,
    pub value_bytes: u64,
    /// Indexed by `Segment as usize - 1`.
    pub segments: [SegmentStats; 3],
}

impl HistStats {
    pub fn entries(&self) -> u64 {
        self.anchors + self.deltas
    }

    pub fn segment(&self, s: Segment) -> SegmentStats {
        self.segments[s as usize - 1]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PurgeReport {
    pub horizon: Timestamp,
    pub removed: u64,
}

pub struct HistoricalStore {
    kv: RwLock<Box<dyn OrderedKv>>,
    meta: Mutex<HashMap<(Segment, Gid), MigrationMeta>>,
    vertex_gids: RwLock<BTreeSet<Gid>>,
    policy: AnchorPolicy,
    purge_horizon: AtomicU64,
}

impl HistoricalStore {
    pub fn in_memory(policy: AnchorPolicy) -> Result<Self, HistError> {
        Self::with_kv(Box::new(LogKv::in_memory()), policy)
    }

    pub fn open(dir: &Path, policy: AnchorPolicy, sync: bool) -> Result<Self, HistError> {
        Self::with_kv(Box::new(LogKv::open(dir, sync)?), policy)
    }

    /// Wraps an existing key-value space, rebuilding per-object metadata.
    pub fn with_kv(kv: Box<dyn OrderedKv>, policy: AnchorPolicy) -> Result<Self, HistError> {
        policy.validate()?;
        let mut meta: HashMap<(Segment, Gid), MigrationMeta> = HashMap::new();
        let mut last_anchor: HashMap<(Segment, Gid), Timestamp> = HashMap::new();
        let mut deltas: HashMap<(Segment, Gid), Vec<Timestamp>> = HashMap::new();
        let mut vertex_gids = BTreeSet::new();
        for (k, _) in kv.range(Bound::Included(&[0x01]), Bound::Unbounded) {
            let key = HistKey::decode(k)?;
            let id = (key.segment, key.gid);
            let m = meta.entry(id).or_default();
            m.migrated += 1;
            m.has_base = true;
            if m.last.is_none_or(|l| l.st < key.lifespan.st) {
                m.last = Some(key.lifespan);
            }
            match key.kind {
                Kind::Anchor => {
                    let a = last_anchor.entry(id).or_insert(key.lifespan.st);
                    *a = (*a).max(key.lifespan.st);
                }
                Kind::Delta => deltas.entry(id).or_default().push(key.lifespan.st),
            }
            if key.segment == Segment::V {
                vertex_gids.insert(key.gid);
            }
        }
        for (id, sts) in deltas {
            let anchor = last_anchor.get(&id).copied().unwrap_or(Timestamp::NEG_INF);
            if let Some(m) = meta.get_mut(&id) {
                m.since_anchor = sts.iter().filter(|st| **st > anchor).count() as u64;
            }
        }
        let horizon = kv
            .get(PURGE_HORIZON_KEY)
            .and_then(|b| b.try_into().ok())
            .map(u64::from_be_bytes)
            .unwrap_or(0);
        Ok(HistoricalStore {
            kv: RwLock::new(kv),
            meta: Mutex::new(meta),
            vertex_gids: RwLock::new(vertex_gids),
            policy,
            purge_horizon: AtomicU64::new(horizon),
        })
    }

    pub fn policy(&self) -> AnchorPolicy {
        self.policy
    }

    /// Entries ending at or before this instant may have been purged.
    pub fn purge_horizon(&self) -> Timestamp {
        Timestamp(self.purge_horizon.load(Ordering::Acquire))
    }

    pub fn begin_batch(&self) -> HistBatch {
        HistBatch::default()
    }

    /// Stages one version of `(segment, gid)`, choosing anchor or delta.
    ///
    /// Versions of one object must arrive in start order, each starting no
    /// earlier than the previous one ended.
    pub fn put_version(
        &self,
        batch: &mut HistBatch,
        segment: Segment,
        gid: Gid,
        lifespan: Lifespan,
        state: &PartState,
    ) -> Result<Kind, HistError> {
        let id = (segment, gid);
        batch
            .meta
            .entry(id)
            .or_insert_with(|| self.meta.lock().get(&id).cloned().unwrap_or_default());
        let needs_base = {
            let m = &batch.meta[&id];
            m.has_base && m.last_state.is_none() && m.last.is_some_and(|l| l.ed == lifespan.st)
        };
        if needs_base {
            let last = batch.meta[&id].last.unwrap();
            let base = self.read().state_at(segment, gid, last.st)?;
            batch.meta.get_mut(&id).unwrap().last_state = base;
        }
        let m = batch.meta.get_mut(&id).unwrap();
        if let Some(last) = m.last {
            if lifespan.st < last.ed {
                return Err(HistError::OutOfOrder {
                    segment,
                    gid,
                    st: lifespan.st,
                    last_ed: last.ed,
                });
            }
        }
        let prev = match (m.has_base, m.last, &m.last_state) {
            (true, Some(l), Some(s)) if l.ed == lifespan.st => Some(s),
            _ => None,
        };
        let u = self.policy.interval(m.migrated);
        let (kind, value) = match prev {
            Some(p) if m.since_anchor + 1 < u => (Kind::Delta, codec::encode_delta(&PartDelta::diff(p, state))),
            _ => (Kind::Anchor, codec::encode_state(state)),
        };
        let key = HistKey {
            segment,
            kind,
            gid,
            lifespan,
        };
        batch.ops.push(BatchOp::Put(key.encode().to_vec(), value));
        m.migrated += 1;
        m.since_anchor = match kind {
            Kind::Anchor => {
                batch.anchors += 1;
                0
            }
            Kind::Delta => {
                batch.deltas += 1;
                m.since_anchor + 1
            }
        };
        m.last = Some(lifespan);
        m.last_state = Some(state.clone());
        m.has_base = true;
        Ok(kind)
    }

    /// Publishes a batch atomically with respect to readers.
    pub fn commit_batch(&self, batch: HistBatch) -> Result<(), HistError> {
        if batch.ops.is_empty() {
            return Ok(());
        }
        self.kv.write().write_batch(batch.ops)?;
        let mut gids = self.vertex_gids.write();
        let mut meta = self.meta.lock();
        for (id, m) in batch.meta {
            if id.0 == Segment::V {
                gids.insert(id.1);
            }
            meta.insert(id, m);
        }
        Ok(())
    }

    /// A consistent read view; holds the store's read lock until dropped.
    pub fn read(&self) -> HistReader<'_> {
        HistReader { kv: self.kv.read() }
    }

    /// Vertices with any migrated properties version.
    pub fn vertex_gids(&self) -> Vec<Gid> {
        self.vertex_gids.read().iter().copied().collect()
    }

    /// Raises the purge horizon to `cutoff` and removes every entry no longer
    /// needed to answer windows at or after it. An entry is dropped when it
    /// ended before `cutoff` and is not the anchor some kept delta replays from.
    pub fn purge(&self, cutoff: Timestamp) -> Result<PurgeReport, HistError> {
        let horizon = self.purge_horizon().max(cutoff);
        let mut kv = self.kv.write();
        let mut groups: HashMap<(Segment, Gid), Vec<HistKey>> = HashMap::new();
        for (k, _) in kv.range(Bound::Included(&[0x01]), Bound::Unbounded) {
            let key = HistKey::decode(k)?;
            groups.entry((key.segment, key.gid)).or_default().push(key);
        }
        let mut ops = Vec::new();
        let mut emptied = Vec::new();
        for (id, mut keys) in groups {
            keys.sort_by_key(|k| k.lifespan.st);
            let keep_from = match keys.iter().position(|k| k.lifespan.ed >= horizon) {
                None => {
                    emptied.push(id);
                    keys.len()
                }
                Some(i) => keys[..=i]
                    .iter()
                    .rposition(|k| k.kind == Kind::Anchor)
                    .unwrap_or(0),
            };
            ops.extend(keys[..keep_from].iter().map(|k| BatchOp::Delete(k.encode().to_vec())));
        }
        let removed = ops.len() as u64;
        ops.push(BatchOp::Put(PURGE_HORIZON_KEY.to_vec(), horizon.0.to_be_bytes().to_vec()));
        kv.write_batch(ops)?;
        self.purge_horizon.store(horizon.0, Ordering::Release);
        let mut meta = self.meta.lock();
        for id in emptied {
            if let Some(m) = meta.get_mut(&id) {
                m.has_base = false;
                m.last_state = None;
                m.since_anchor = 0;
            }
        }
        Ok(PurgeReport { horizon, removed })
    }

    pub fn stats(&self) -> HistStats {
        let kv = self.kv.read();
        let mut s = HistStats::default();
        for (k, v) in kv.range(Bound::Included(&[0x01]), Bound::Unbounded) {
            let Ok(key) = HistKey::decode(k) else { continue };
            let seg = &mut s.segments[key.segment as usize - 1];
            let bytes = (k.len() + v.len()) as u64;
            match key.kind {
                Kind::Anchor => {
                    s.anchors += 1;
                    seg.anchors += 1;
                }
                Kind::Delta => {
                    s.deltas += 1;
                    seg.deltas += 1;
                }
            }
            s.bytes += bytes;
            s.value_bytes += v.len() as u64;
            seg.bytes += bytes;
        }
        s
    }

    /// Largest finite timestamp and gid mentioned by any stored key.
    pub fn maxima(&self) -> (Timestamp, Option<Gid>) {
        let kv = self.kv.read();
        let mut ts = self.purge_horizon();
        let mut gid = None;
        for (k, _) in kv.range(Bound::Included(&[0x01]), Bound::Unbounded) {
            let Ok(key) = HistKey::decode(k) else { continue };
            ts = ts.max(key.lifespan.st);
            if !key.lifespan.ed.is_inf() {
                ts = ts.max(key.lifespan.ed);
            }
            gid = gid.max(Some(key.gid));
        }
        (ts, gid)
    }
}

/// Read access to the historical key space.
pub struct HistReader<'a> {
    kv: RwLockReadGuard<'a, Box<dyn OrderedKv>>,
}

impl HistReader<'_> {
    /// Latest anchor of `(segment, gid)` starting at or before `t`, or the
    /// earliest anchor when all start later.
    pub fn seek_latest_anchor(
        &self,
        segment: Segment,
        gid: Gid,
        t: Timestamp,
        counters: &mut ReadCounters,
    ) -> Result<Option<(HistKey, PartState)>, HistError> {
        let lo = raw_key(segment, Kind::Anchor, gid, Timestamp::NEG_INF, Timestamp::NEG_INF);
        let at = raw_key(segment, Kind::Anchor, gid, t, Timestamp::INF);
        let hi = raw_key(segment, Kind::Anchor, gid, Timestamp::INF, Timestamp::INF);
        counters.anchors_seeked += 1;
        let found = self
            .kv
            .range(Bound::Included(&lo), Bound::Included(&at))
            .next_back()
            .or_else(|| self.kv.range(Bound::Included(&lo), Bound::Included(&hi)).next());
        let Some((k, v)) = found else {
            return Ok(None);
        };
        counters.hist_entries_touched += 1;
        let key = HistKey::decode(k)?;
        match codec::decode(v)? {
            Payload::Anchor(s) => Ok(Some((key, s))),
            Payload::Delta(_) => Err(HistError::CorruptChain {
                segment,
                gid,
                detail: format!("anchor key {} holds a delta", key.lifespan),
            }),
        }
    }

    /// Replays from `anchor` forward, returning every version legal in `cond`
    /// in start order.
    pub fn scan_versions_from(
        &self,
        anchor: (HistKey, PartState),
        cond: TimeCondition,
        counters: &mut ReadCounters,
    ) -> Result<Vec<(Lifespan, PartState)>, HistError> {
        let (akey, astate) = anchor;
        let (segment, gid) = (akey.segment, akey.gid);
        let start = akey.lifespan.st;
        let mut out = Vec::new();
        if start > cond.t2 {
            return Ok(out);
        }
        let corrupt = |detail: String| HistError::CorruptChain { segment, gid, detail };

        let a_lo = raw_key(segment, Kind::Anchor, gid, start, Timestamp::INF);
        let a_hi = raw_key(segment, Kind::Anchor, gid, cond.t2, Timestamp::INF);
        let d_lo = raw_key(segment, Kind::Delta, gid, start, Timestamp::INF);
        let d_hi = raw_key(segment, Kind::Delta, gid, cond.t2, Timestamp::INF);
        let mut anchors = self
            .kv
            .range(Bound::Excluded(&a_lo), Bound::Included(&a_hi))
            .peekable();
        let mut deltas = self
            .kv
            .range(Bound::Excluded(&d_lo), Bound::Included(&d_hi))
            .peekable();

        let mut span = akey.lifespan;
        let mut state = astate;
        if legal_check(span, cond) {
            out.push((span, state.clone()));
        }
        loop {
            let next_anchor = anchors.peek().map(|(k, _)| &k[10..18]);
            let next_delta = deltas.peek().map(|(k, _)| &k[10..18]);
            let take_anchor = match (next_anchor, next_delta) {
                (None, None) => break,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (Some(a), Some(d)) => a <= d,
            };
            let (k, v) = if take_anchor {
                anchors.next().unwrap()
            } else {
                deltas.next().unwrap()
            };
            counters.hist_entries_touched += 1;
            let key = HistKey::decode(k)?;
            if key.lifespan.st != span.ed {
                return Err(corrupt(format!(
                    "entry {} does not continue {}",
                    key.lifespan, span
                )));
            }
            match codec::decode(v)? {
                Payload::Anchor(s) if key.kind == Kind::Anchor => state = s,
                Payload::Delta(d) if key.kind == Kind::Delta => {
                    d.apply(&mut state)
                        .map_err(|e| corrupt(format!("delta at {}: {e}", key.lifespan)))?;
                    counters.deltas_applied += 1;
                }
                _ => return Err(corrupt(format!("payload kind mismatch at {}", key.lifespan))),
            }
            span = key.lifespan;
            if legal_check(span, cond) {
                out.push((span, state.clone()));
            }
        }
        Ok(out)
    }

    /// Every stored version of `(segment, gid)` legal in `cond`.
    pub fn fetch(
        &self,
        segment: Segment,
        gid: Gid,
        cond: TimeCondition,
        counters: &mut ReadCounters,
    ) -> Result<Vec<(Lifespan, PartState)>, HistError> {
        // Versions tile time, so the newest entry starting by t2 decides
        // whether anything is legal; without this a window after deletion
        // would replay a whole anchor interval for nothing.
        let mut newest: Option<Timestamp> = None;
        for kind in [Kind::Anchor, Kind::Delta] {
            let lo = raw_key(segment, kind, gid, Timestamp::NEG_INF, Timestamp::NEG_INF);
            let hi = raw_key(segment, kind, gid, cond.t2, Timestamp::INF);
            if let Some((k, _)) = self.kv.range(Bound::Included(&lo), Bound::Included(&hi)).next_back() {
                let key = HistKey::decode(k)?;
                newest = Some(newest.map_or(key.lifespan.ed, |e| e.max(key.lifespan.ed)));
            }
        }
        if newest.is_none_or(|ed| ed <= cond.t1) {
            return Ok(Vec::new());
        }
        match self.seek_latest_anchor(segment, gid, cond.t1, counters)? {
            None => Ok(Vec::new()),
            Some(anchor) => {
                let out = self.scan_versions_from(anchor, cond, counters)?;
                if !out.is_empty() {
                    counters.hist_reconstructions += 1;
                }
                Ok(out)
            }
        }
    }

    /// State of the stored version of `(segment, gid)` starting exactly at `st`.
    pub fn state_at(&self, segment: Segment, gid: Gid, st: Timestamp) -> Result<Option<PartState>, HistError> {
        let mut c = ReadCounters::default();
        let found = self.fetch(segment, gid, TimeCondition::point(st), &mut c)?;
        Ok(found.into_iter().find(|(l, _)| l.st == st).map(|(_, s)| s))
    }

    /// Every entry in key order; for inspection and tests.
    pub fn entries(&self) -> Result<Vec<(HistKey, Payload)>, HistError> {
        self.kv
            .range(Bound::Included(&[0x01]), Bound::Unbounded)
            .map(|(k, v)| Ok((HistKey::decode(k)?, codec::decode(v)?)))
            .collect()
    }

    /// Number of stored entries of `(segment, gid)`.
    pub fn entry_count(&self, segment: Segment, gid: Gid) -> usize {
        [Kind::Anchor, Kind::Delta]
            .into_iter()
            .map(|kind| {
                let p = prefix(segment, kind, gid);
                let mut hi = [0xFFu8; KEY_LEN];
                hi[..10].copy_from_slice(&p);
                self.kv
                    .range(Bound::Included(&p), Bound::Included(&hi))
                    .count()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{props, Value};
    use crate::state::VertexProps;

    fn vstate(i: i64) -> PartState {
        PartState::Vertex(VertexProps {
            labels: Default::default(),
            props: props([("n", Value::Int(i))]),
        })
    }

    fn ls(a: u64, b: u64) -> Lifespan {
        Lifespan::new(Timestamp(a), Timestamp(b))
    }

    /// Puts versions [10i, 10i+10) for i in 0..n, each holding `n = i`.
    fn chain(store: &HistoricalStore, gid: Gid, n: u64) -> Vec<Kind> {
        let mut batch = store.begin_batch();
        let kinds = (0..n)
            .map(|i| {
                store
                    .put_version(&mut batch, Segment::V, gid, ls(10 * i + 10, 10 * i + 20), &vstate(i as i64))
                    .unwrap()
            })
            .collect();
        store.commit_batch(batch).unwrap();
        kinds
    }

    #[test]
    fn fixed_interval_pattern() {
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(3)).unwrap();
        use Kind::*;
        assert_eq!(chain(&s, Gid(1), 5), vec![Anchor, Delta, Delta, Anchor, Delta]);
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(1)).unwrap();
        assert!(chain(&s, Gid(1), 4).iter().all(|k| *k == Anchor));
    }

    #[test]
    fn every_version_is_reconstructed() {
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(4)).unwrap();
        chain(&s, Gid(7), 30);
        let r = s.read();
        for i in 0..30u64 {
            let t = Timestamp(10 * i + 15);
            let mut c = ReadCounters::default();
            let got = r.fetch(Segment::V, Gid(7), TimeCondition::point(t), &mut c).unwrap();
            assert_eq!(got, vec![(ls(10 * i + 10, 10 * i + 20), vstate(i as i64))]);
            assert_eq!(c.anchors_seeked, 1);
            assert!(c.deltas_applied <= 3);
        }
        let mut c = ReadCounters::default();
        let all = r
            .fetch(Segment::V, Gid(7), TimeCondition::new(Timestamp(0), Timestamp::INF).unwrap(), &mut c)
            .unwrap();
        assert_eq!(all.len(), 30);
        let none = r
            .fetch(Segment::V, Gid(7), TimeCondition::point(Timestamp(5)), &mut c)
            .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn out_of_order_is_rejected() {
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(4)).unwrap();
        chain(&s, Gid(1), 2);
        let mut b = s.begin_batch();
        let err = s.put_version(&mut b, Segment::V, Gid(1), ls(15, 40), &vstate(0)).unwrap_err();
        assert!(matches!(err, HistError::OutOfOrder { .. }));
    }

    #[test]
    fn broken_chain_is_detected() {
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(10)).unwrap();
        chain(&s, Gid(1), 3);
        let k = HistKey {
            segment: Segment::V,
            kind: Kind::Delta,
            gid: Gid(1),
            lifespan: ls(20, 30),
        };
        s.kv.write().write_batch(vec![BatchOp::Delete(k.encode().to_vec())]).unwrap();
        let mut c = ReadCounters::default();
        let err = s
            .read()
            .fetch(Segment::V, Gid(1), TimeCondition::point(Timestamp(35)), &mut c)
            .unwrap_err();
        assert!(matches!(err, HistError::CorruptChain { .. }));
    }

    #[test]
    fn purge_keeps_governing_anchor() {
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(4)).unwrap();
        // anchors at st 10, 50, 90; deltas between
        chain(&s, Gid(1), 12);
        let report = s.purge(Timestamp(75)).unwrap();
        // [70,80) is the first kept version; its anchor starts at 50.
        assert_eq!(report.removed, 4);
        let r = s.read();
        assert_eq!(r.entry_count(Segment::V, Gid(1)), 8);
        let mut c = ReadCounters::default();
        let got = r
            .fetch(Segment::V, Gid(1), TimeCondition::point(Timestamp(75)), &mut c)
            .unwrap();
        assert_eq!(got, vec![(ls(70, 80), vstate(6))]);
        drop(r);
        // Everything ended: the object is emptied, the next version anchors.
        s.purge(Timestamp(1000)).unwrap();
        assert_eq!(s.read().entry_count(Segment::V, Gid(1)), 0);
        let mut b = s.begin_batch();
        let k = s.put_version(&mut b, Segment::V, Gid(1), ls(130, 140), &vstate(99)).unwrap();
        assert_eq!(k, Kind::Anchor);
        assert_eq!(s.purge_horizon(), Timestamp(1000));
    }

    #[test]
    fn reopen_restores_entries_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let before;
        {
            let s = HistoricalStore::open(dir.path(), AnchorPolicy::Fixed(3), false).unwrap();
            chain(&s, Gid(4), 4);
            s.purge(Timestamp(12)).unwrap();
            before = s.read().entries().unwrap();
        }
        let s = HistoricalStore::open(dir.path(), AnchorPolicy::Fixed(3), false).unwrap();
        assert_eq!(s.read().entries().unwrap(), before);
        assert_eq!(s.purge_horizon(), Timestamp(12));
        assert_eq!(s.vertex_gids(), vec![Gid(4)]);
        // A D D A, then one more delta continues from the cached-on-demand state.
        let mut b = s.begin_batch();
        let k = s.put_version(&mut b, Segment::V, Gid(4), ls(50, 60), &vstate(4)).unwrap();
        assert_eq!(k, Kind::Delta);
        s.commit_batch(b).unwrap();
        let mut c = ReadCounters::default();
        let got = s
            .read()
            .fetch(Segment::V, Gid(4), TimeCondition::point(Timestamp(55)), &mut c)
            .unwrap();
        assert_eq!(got, vec![(ls(50, 60), vstate(4))]);
        assert_eq!(s.maxima(), (Timestamp(60), Some(Gid(4))));
    }

    #[test]
    fn stats_count_segments() {
        let s = HistoricalStore::in_memory(AnchorPolicy::Fixed(2)).unwrap();
        chain(&s, Gid(1), 4);
        let st = s.stats();
        assert_eq!((st.anchors, st.deltas), (2, 2));
        assert_eq!(st.segment(Segment::V).anchors, 2);
        assert_eq!(st.segment(Segment::E), SegmentStats::default());
        assert!(st.bytes > 4 * KEY_LEN as u64);
    }
}
