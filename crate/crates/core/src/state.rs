//! Full part states and the diffs between consecutive versions of a part.
//!
//! The same diff type serves as a reverse delta in undo records and as a
//! forward delta in the historical store; only the direction of `diff` differs.

use std::collections::BTreeSet;

use crate::model::{Gid, LabelSet, PropertyMap, Value};

/// Independently versioned component of a graph object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    /// Vertex labels and properties.
    Vp,
    /// Edge type and properties.
    Ep,
    /// Vertex adjacency lists.
    Ve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Out,
    In,
}

/// One adjacency entry: the edge and the vertex on its other end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdjEntry {
    pub edge: Gid,
    pub neighbor: Gid,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct VertexProps {
    pub labels: LabelSet,
    pub props: PropertyMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EdgeProps {
    pub edge_type: String,
    pub props: PropertyMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Adjacency {
    pub incoming: BTreeSet<AdjEntry>,
    pub outgoing: BTreeSet<AdjEntry>,
}

impl Adjacency {
    pub fn list(&self, dir: Direction) -> &BTreeSet<AdjEntry> {
        match dir {
            Direction::Out => &self.outgoing,
            Direction::In => &self.incoming,
        }
    }

    pub fn list_mut(&mut self, dir: Direction) -> &mut BTreeSet<AdjEntry> {
        match dir {
            Direction::Out => &mut self.outgoing,
            Direction::In => &mut self.incoming,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.incoming.is_empty() && self.outgoing.is_empty()
    }
}

/// Complete state of one part version.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PartState {
    Vertex(VertexProps),
    Edge(EdgeProps),
    Adj(Adjacency),
}

impl PartState {
    pub fn part(&self) -> Part {
        match self {
            PartState::Vertex(_) => Part::Vp,
            PartState::Edge(_) => Part::Ep,
            PartState::Adj(_) => Part::Ve,
        }
    }

    pub fn props(&self) -> Option<&PropertyMap> {
        match self {
            PartState::Vertex(v) => Some(&v.props),
            PartState::Edge(e) => Some(&e.props),
            PartState::Adj(_) => None,
        }
    }

    pub fn props_mut(&mut self) -> Option<&mut PropertyMap> {
        match self {
            PartState::Vertex(v) => Some(&mut v.props),
            PartState::Edge(e) => Some(&mut e.props),
            PartState::Adj(_) => None,
        }
    }

    pub fn as_adj(&self) -> Option<&Adjacency> {
        match self {
            PartState::Adj(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_adj_mut(&mut self) -> Option<&mut Adjacency> {
        match self {
            PartState::Adj(a) => Some(a),
            _ => None,
        }
    }
}

/// Property-level changes: keys to (re)assign and keys to drop.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropsDelta {
    pub set: Vec<(String, Value)>,
    pub removed: Vec<String>,
}

impl PropsDelta {
    fn diff(from: &PropertyMap, to: &PropertyMap) -> Self {
        let set = to
            .iter()
            .filter(|(k, v)| from.get(*k) != Some(*v))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let removed = from
            .keys()
            .filter(|k| !to.contains_key(*k))
            .cloned()
            .collect();
        PropsDelta { set, removed }
    }

    fn apply(&self, props: &mut PropertyMap) {
        for k in &self.removed {
            props.remove(k);
        }
        for (k, v) in &self.set {
            props.insert(k.clone(), v.clone());
        }
    }

    fn touches(&self, key: &str) -> bool {
        self.set.iter().any(|(k, _)| k == key) || self.removed.iter().any(|k| k == key)
    }

    /// Records the value `key` had before a change, unless already recorded.
    pub(crate) fn remember(&mut self, key: &str, prior: Option<&Value>) {
        if self.touches(key) {
            return;
        }
        match prior {
            Some(v) => self.set.push((key.to_string(), v.clone())),
            None => self.removed.push(key.to_string()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty() && self.removed.is_empty()
    }
}

/// Adjacency entries gained and lost.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdjDelta {
    pub added: Vec<(Direction, AdjEntry)>,
    pub removed: Vec<(Direction, AdjEntry)>,
}

impl AdjDelta {
    fn diff(from: &Adjacency, to: &Adjacency) -> Self {
        let mut d = AdjDelta::default();
        for dir in [Direction::Out, Direction::In] {
            let (a, b) = (from.list(dir), to.list(dir));
            d.added.extend(b.difference(a).map(|e| (dir, *e)));
            d.removed.extend(a.difference(b).map(|e| (dir, *e)));
        }
        d
    }

    fn apply(&self, adj: &mut Adjacency) {
        for (dir, e) in &self.removed {
            adj.list_mut(*dir).remove(e);
        }
        for (dir, e) in &self.added {
            adj.list_mut(*dir).insert(*e);
        }
    }

    /// Folds a forward change of one entry into this reverse delta.
    ///
    /// Adding an entry that this delta would re-add (it was removed earlier in
    /// the same transaction) cancels out, and likewise for removals.
    pub(crate) fn record_reverse(&mut self, dir: Direction, entry: AdjEntry, added: bool) {
        let item = (dir, entry);
        let (undo_list, cancel_list) = if added {
            (&mut self.removed, &mut self.added)
        } else {
            (&mut self.added, &mut self.removed)
        };
        if let Some(pos) = cancel_list.iter().position(|x| *x == item) {
            cancel_list.remove(pos);
        } else {
            undo_list.push(item);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

/// Difference between two states of the same part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartDelta {
    Vertex {
        labels: Option<LabelSet>,
        props: PropsDelta,
    },
    Edge {
        edge_type: Option<String>,
        props: PropsDelta,
    },
    Adj(AdjDelta),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("delta for {delta:?} part applied to {state:?} state")]
pub struct PartMismatch {
    pub delta: Part,
    pub state: Part,
}

impl PartDelta {
    /// The delta that turns `from` into `to`.
    ///
    /// # Panics
    /// If the states belong to different parts.
    pub fn diff(from: &PartState, to: &PartState) -> PartDelta {
        match (from, to) {
            (PartState::Vertex(a), PartState::Vertex(b)) => PartDelta::Vertex {
                labels: (a.labels != b.labels).then(|| b.labels.clone()),
                props: PropsDelta::diff(&a.props, &b.props),
            },
            (PartState::Edge(a), PartState::Edge(b)) => PartDelta::Edge {
                edge_type: (a.edge_type != b.edge_type).then(|| b.edge_type.clone()),
                props: PropsDelta::diff(&a.props, &b.props),
            },
            (PartState::Adj(a), PartState::Adj(b)) => PartDelta::Adj(AdjDelta::diff(a, b)),
            _ => panic!("diff across parts: {:?} vs {:?}", from.part(), to.part()),
        }
    }

    pub fn empty_for(part: Part) -> PartDelta {
        match part {
            Part::Vp => PartDelta::Vertex {
                labels: None,
                props: PropsDelta::default(),
            },
            Part::Ep => PartDelta::Edge {
                edge_type: None,
                props: PropsDelta::default(),
            },
            Part::Ve => PartDelta::Adj(AdjDelta::default()),
        }
    }

    pub fn part(&self) -> Part {
        match self {
            PartDelta::Vertex { .. } => Part::Vp,
            PartDelta::Edge { .. } => Part::Ep,
            PartDelta::Adj(_) => Part::Ve,
        }
    }

    pub fn apply(&self, state: &mut PartState) -> Result<(), PartMismatch> {
        match (self, state) {
            (PartDelta::Vertex { labels, props }, PartState::Vertex(v)) => {
                if let Some(l) = labels {
                    v.labels = l.clone();
                }
                props.apply(&mut v.props);
            }
            (PartDelta::Edge { edge_type, props }, PartState::Edge(e)) => {
                if let Some(t) = edge_type {
                    e.edge_type = t.clone();
                }
                props.apply(&mut e.props);
            }
            (PartDelta::Adj(d), PartState::Adj(a)) => d.apply(a),
            (d, s) => {
                return Err(PartMismatch {
                    delta: d.part(),
                    state: s.part(),
                })
            }
        }
        Ok(())
    }

    pub fn props_mut(&mut self) -> Option<&mut PropsDelta> {
        match self {
            PartDelta::Vertex { props, .. } | PartDelta::Edge { props, .. } => Some(props),
            PartDelta::Adj(_) => None,
        }
    }

    pub fn adj_mut(&mut self) -> Option<&mut AdjDelta> {
        match self {
            PartDelta::Adj(d) => Some(d),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{labels, props};
    use proptest::prelude::*;

    fn arb_props() -> impl Strategy<Value = PropertyMap> {
        prop::collection::btree_map(
            "[a-d]",
            prop_oneof![
                any::<i64>().prop_map(Value::Int),
                "[a-z]{0,4}".prop_map(Value::Str),
                any::<bool>().prop_map(Value::Bool),
                Just(Value::Null),
            ],
            0..4,
        )
    }

    fn arb_adj() -> impl Strategy<Value = Adjacency> {
        let entry = (0u64..6, 0u64..4).prop_map(|(e, n)| AdjEntry {
            edge: Gid(e),
            neighbor: Gid(n),
        });
        (
            prop::collection::btree_set(entry.clone(), 0..5),
            prop::collection::btree_set(entry, 0..5),
        )
            .prop_map(|(incoming, outgoing)| Adjacency { incoming, outgoing })
    }

    proptest! {
        #[test]
        fn vertex_diff_applies(a in arb_props(), b in arb_props(), relabel in any::<bool>()) {
            let from = PartState::Vertex(VertexProps { labels: labels(["A"]), props: a });
            let to = PartState::Vertex(VertexProps {
                labels: if relabel { labels(["B"]) } else { labels(["A"]) },
                props: b,
            });
            let mut s = from.clone();
            PartDelta::diff(&from, &to).apply(&mut s).unwrap();
            prop_assert_eq!(s, to);
        }

        #[test]
        fn adjacency_diff_applies(a in arb_adj(), b in arb_adj()) {
            let from = PartState::Adj(a);
            let to = PartState::Adj(b);
            let mut s = from.clone();
            PartDelta::diff(&from, &to).apply(&mut s).unwrap();
            prop_assert_eq!(s, to);
        }
    }

    #[test]
    fn remembered_priors_restore_original() {
        let original = props([("a", Value::Int(1)), ("b", Value::from("x"))]);
        let mut current = original.clone();
        let mut undo = PropsDelta::default();
        for (k, v) in [("a", Some(Value::Int(2))), ("c", Some(Value::Int(3))), ("a", None)] {
            undo.remember(k, current.get(k));
            match v {
                Some(v) => current.insert(k.to_string(), v),
                None => current.remove(k),
            };
        }
        undo.apply(&mut current);
        assert_eq!(current, original);
    }

    #[test]
    fn reverse_adjacency_cancels() {
        let e = AdjEntry {
            edge: Gid(9),
            neighbor: Gid(1),
        };
        let mut d = AdjDelta::default();
        d.record_reverse(Direction::Out, e, true);
        assert_eq!(d.removed, vec![(Direction::Out, e)]);
        d.record_reverse(Direction::Out, e, false);
        assert!(d.is_empty());
    }

    #[test]
    fn mismatched_part_is_an_error() {
        let mut s = PartState::Adj(Adjacency::default());
        let d = PartDelta::empty_for(Part::Vp);
        assert!(d.apply(&mut s).is_err());
    }
}
