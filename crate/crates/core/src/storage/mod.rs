//! Multi-version current store.
//!
//! Every vertex keeps its properties (VP) and adjacency (VE) as separately
//! versioned parts, every edge its properties (EP). Modifications happen in
//! place; the superseded state is kept as a reverse delta on the object's
//! undo chain until migration moves it to the historical store.

pub(crate) mod checkpoint;
pub mod object;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::model::{Gid, LabelSet, PropertyMap, Value};
use crate::state::{AdjEntry, Direction, EdgeProps, Part, PartState, VertexProps};
use crate::txn::TxnState;

pub use object::{Object, ObjectKind, PartSlot, SeenVersion, Stamp, UndoAction, UndoRecord, WriteCheck};

pub type ObjRef = Arc<RwLock<Object>>;

/// Objects a transaction has modified, in first-touch order.
#[derive(Debug, Default)]
pub struct Touched {
    order: Vec<ObjRef>,
    seen: HashSet<Gid>,
}

impl Touched {
    fn add(&mut self, gid: Gid, obj: &ObjRef) {
        if self.seen.insert(gid) {
            self.order.push(obj.clone());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn objects(&self) -> &[ObjRef] {
        &self.order
    }

    pub fn into_objects(self) -> Vec<ObjRef> {
        self.order
    }
}

/// A writing transaction's view of the store.
pub struct WriteCtx<'a> {
    pub txn: &'a Arc<TxnState>,
    pub touched: &'a mut Touched,
}

#[derive(Debug, Default)]
pub struct CurrentStore {
    vertices: RwLock<BTreeMap<Gid, ObjRef>>,
    edges: RwLock<BTreeMap<Gid, ObjRef>>,
    next_gid: AtomicU64,
    // Every (key, value) ever assigned to a vertex. Append-only, so it is a
    // superset index valid for historical lookups too.
    prop_index: RwLock<HashMap<String, HashMap<Value, BTreeSet<Gid>>>>,
    // Set when history predates the index (after reopening a store).
    index_partial: AtomicBool,
}

/// Fails when `o` is invisible to the writer, dead, or modified by a
/// transaction outside the writer's snapshot.
fn writable(o: &Object, txn: &TxnState, missing: fn(Gid) -> Error) -> Result<()> {
    match o.check_writable(txn) {
        WriteCheck::Conflict => Err(Error::WriteConflict(o.gid)),
        WriteCheck::Invisible => Err(missing(o.gid)),
        WriteCheck::Ok if !o.is_alive_in_place() => Err(missing(o.gid)),
        WriteCheck::Ok => Ok(()),
    }
}

fn clean_props(props: PropertyMap) -> PropertyMap {
    props.into_iter().filter(|(_, v)| !v.is_null()).collect()
}

impl CurrentStore {
    pub fn new(first_gid: u64) -> Self {
        CurrentStore {
            next_gid: AtomicU64::new(first_gid),
            ..Default::default()
        }
    }

    fn alloc_gid(&self) -> Gid {
        Gid(self.next_gid.fetch_add(1, Ordering::Relaxed))
    }

    pub fn vertex(&self, gid: Gid) -> Option<ObjRef> {
        self.vertices.read().get(&gid).cloned()
    }

    pub fn edge(&self, gid: Gid) -> Option<ObjRef> {
        self.edges.read().get(&gid).cloned()
    }

    pub fn object(&self, gid: Gid) -> Option<ObjRef> {
        self.vertex(gid).or_else(|| self.edge(gid))
    }

    /// All vertex records, including tombstones whose history may still be
    /// reachable, in id order.
    pub fn vertex_refs(&self) -> Vec<ObjRef> {
        self.vertices.read().values().cloned().collect()
    }

    pub fn edge_refs(&self) -> Vec<ObjRef> {
        self.edges.read().values().cloned().collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.read().len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.read().len()
    }

    /// Vertices that ever carried `key = value`.
    pub fn vertices_ever_with(&self, key: &str, value: &Value) -> Vec<ObjRef> {
        let gids: Vec<Gid> = self
            .prop_index
            .read()
            .get(key)
            .and_then(|m| m.get(value))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        let vertices = self.vertices.read();
        gids.iter().filter_map(|g| vertices.get(g).cloned()).collect()
    }

    fn index_props<'p>(&self, gid: Gid, props: impl Iterator<Item = (&'p String, &'p Value)>) {
        let mut idx = self.prop_index.write();
        for (k, v) in props {
            idx.entry(k.clone())
                .or_default()
                .entry(v.clone())
                .or_default()
                .insert(gid);
        }
    }

    pub(crate) fn remove_object(&self, gid: Gid) {
        if self.vertices.write().remove(&gid).is_none() {
            self.edges.write().remove(&gid);
        }
    }

    /// Whether [`Self::vertices_ever_with`] covers all history.
    pub fn index_is_complete(&self) -> bool {
        !self.index_partial.load(Ordering::Relaxed)
    }

    pub(crate) fn mark_index_partial(&self) {
        self.index_partial.store(true, Ordering::Relaxed);
    }

    pub fn next_gid(&self) -> u64 {
        self.next_gid.load(Ordering::Relaxed)
    }

    pub(crate) fn restore_next_gid(&self, next: u64) {
        self.next_gid.fetch_max(next, Ordering::Relaxed);
    }

    pub(crate) fn restore(&self, obj: Object) {
        let gid = obj.gid;
        self.next_gid.fetch_max(gid.0 + 1, Ordering::Relaxed);
        let is_vertex = obj.kind == ObjectKind::Vertex;
        if is_vertex {
            if let Some(p) = obj.main.state.as_ref().and_then(PartState::props) {
                self.index_props(gid, p.iter());
            }
        }
        let r = Arc::new(RwLock::new(obj));
        if is_vertex {
            self.vertices.write().insert(gid, r);
        } else {
            self.edges.write().insert(gid, r);
        }
    }

    pub fn create_vertex(&self, w: &mut WriteCtx<'_>, labels: LabelSet, props: PropertyMap) -> Gid {
        let gid = self.alloc_gid();
        let props = clean_props(props);
        self.index_props(gid, props.iter());
        let obj = Arc::new(RwLock::new(Object::new_vertex(
            gid,
            PartState::Vertex(VertexProps { labels, props }),
            w.txn,
        )));
        self.vertices.write().insert(gid, obj.clone());
        w.touched.add(gid, &obj);
        gid
    }

    pub fn create_edge(
        &self,
        w: &mut WriteCtx<'_>,
        src: Gid,
        dst: Gid,
        edge_type: String,
        props: PropertyMap,
    ) -> Result<Gid> {
        let src_obj = self.vertex(src).ok_or(Error::EndpointMissing(src))?;
        let dst_obj = self.vertex(dst).ok_or(Error::EndpointMissing(dst))?;
        writable(&src_obj.read(), w.txn, Error::EndpointMissing)?;
        writable(&dst_obj.read(), w.txn, Error::EndpointMissing)?;

        let gid = self.alloc_gid();
        let obj = Arc::new(RwLock::new(Object::new_edge(
            gid,
            src,
            dst,
            PartState::Edge(EdgeProps {
                edge_type,
                props: clean_props(props),
            }),
            w.txn,
        )));
        self.edges.write().insert(gid, obj.clone());
        w.touched.add(gid, &obj);

        self.change_adjacency(w, &src_obj, src, Direction::Out, AdjEntry { edge: gid, neighbor: dst }, true)?;
        self.change_adjacency(w, &dst_obj, dst, Direction::In, AdjEntry { edge: gid, neighbor: src }, true)?;
        Ok(gid)
    }

    fn change_adjacency(
        &self,
        w: &mut WriteCtx<'_>,
        obj: &ObjRef,
        gid: Gid,
        dir: Direction,
        entry: AdjEntry,
        add: bool,
    ) -> Result<()> {
        let mut o = obj.write();
        if o.check_writable(w.txn) != WriteCheck::Ok {
            return Err(Error::WriteConflict(gid));
        }
        o.modify(Part::Ve, w.txn, |state, undo| {
            let adj = state.as_adj_mut().expect("VE slot holds adjacency");
            let changed = if add {
                adj.list_mut(dir).insert(entry)
            } else {
                adj.list_mut(dir).remove(&entry)
            };
            if let (true, Some(undo)) = (changed, undo) {
                undo.adj_mut()
                    .expect("VE undo holds an adjacency delta")
                    .record_reverse(dir, entry, add);
            }
        });
        drop(o);
        w.touched.add(gid, obj);
        Ok(())
    }

    /// Applies `changes` to a vertex's or edge's properties; a null value
    /// removes the key.
    pub fn update_properties(&self, w: &mut WriteCtx<'_>, gid: Gid, changes: PropertyMap) -> Result<()> {
        let obj = self.object(gid).ok_or(Error::ObjectMissing(gid))?;
        let mut o = obj.write();
        writable(&o, w.txn, Error::ObjectMissing)?;
        let is_vertex = o.kind == ObjectKind::Vertex;
        let part = o.main_part();
        o.modify(part, w.txn, |state, mut undo| {
            let props = state.props_mut().expect("main part holds properties");
            for (k, v) in &changes {
                if let Some(u) = undo.as_deref_mut() {
                    u.props_mut()
                        .expect("main undo holds a property delta")
                        .remember(k, props.get(k));
                }
                if v.is_null() {
                    props.remove(k);
                } else {
                    props.insert(k.clone(), v.clone());
                }
            }
        });
        drop(o);
        if is_vertex {
            self.index_props(gid, changes.iter().filter(|(_, v)| !v.is_null()));
        }
        w.touched.add(gid, &obj);
        Ok(())
    }

    /// Closes the edge's properties and unlinks it from both endpoints.
    pub fn delete_edge(&self, w: &mut WriteCtx<'_>, gid: Gid) -> Result<()> {
        let obj = self.edge(gid).ok_or(Error::ObjectMissing(gid))?;
        let (src, dst) = {
            let mut o = obj.write();
            writable(&o, w.txn, Error::ObjectMissing)?;
            o.kill(Part::Ep, w.txn);
            match o.kind {
                ObjectKind::Edge { src, dst } => (src, dst),
                ObjectKind::Vertex => unreachable!("edge map holds edges"),
            }
        };
        w.touched.add(gid, &obj);
        for (v, dir, neighbor) in [(src, Direction::Out, dst), (dst, Direction::In, src)] {
            let vobj = self.vertex(v).expect("edge endpoints stay in the store");
            self.change_adjacency(w, &vobj, v, dir, AdjEntry { edge: gid, neighbor }, false)?;
        }
        Ok(())
    }

    /// Deletes the vertex's properties, every connected edge, then its adjacency.
    pub fn delete_vertex(&self, w: &mut WriteCtx<'_>, gid: Gid) -> Result<()> {
        let obj = self.vertex(gid).ok_or(Error::ObjectMissing(gid))?;
        let edges: BTreeSet<Gid> = {
            let mut o = obj.write();
            writable(&o, w.txn, Error::ObjectMissing)?;
            o.kill(Part::Vp, w.txn);
            let adj = o.adj.as_ref().and_then(|s| s.state.as_ref());
            adj.and_then(PartState::as_adj)
                .map(|a| a.incoming.iter().chain(&a.outgoing).map(|e| e.edge).collect())
                .unwrap_or_default()
        };
        w.touched.add(gid, &obj);
        for e in edges {
            self.delete_edge(w, e)?;
        }
        obj.write().kill(Part::Ve, w.txn);
        Ok(())
    }
}
