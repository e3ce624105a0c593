//! In-place object records, their undo chains, and snapshot reconstruction.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::model::{Gid, Lifespan, Timestamp};
use crate::state::{Adjacency, Part, PartDelta, PartState};
use crate::txn::{TxnState, TxnStatus};

/// Start time of an in-place part: fixed once the writer committed, pending
/// (resolved through the writer's shared state) until then.
#[derive(Debug, Clone)]
pub enum Stamp {
    At(Timestamp),
    Pending(Arc<TxnState>),
}

impl Stamp {
    /// Resolves to a timestamp as seen by `reader`; a reader's own pending
    /// writes are provisionally stamped with its start timestamp.
    fn resolve(&self, reader: &TxnState) -> Timestamp {
        match self {
            Stamp::At(t) => *t,
            Stamp::Pending(w) => match w.status() {
                TxnStatus::Committed(t) => t,
                _ if w.id() == reader.id() => reader.start_ts(),
                _ => Timestamp::INF,
            },
        }
    }

    fn is_pending_for(&self, txn: &TxnState) -> bool {
        matches!(self, Stamp::Pending(w) if w.id() == txn.id())
    }
}

/// The in-place copy of one part. `state == None` means the part is dead.
#[derive(Debug, Clone)]
pub struct PartSlot {
    pub state: Option<PartState>,
    pub st: Stamp,
}

/// What reverting an undo record does.
#[derive(Debug, Clone)]
pub enum UndoAction {
    /// Object creation; reverting removes the object.
    Created,
    /// Reverse diff of a part that stays alive.
    Delta(PartDelta),
    /// Part deletion; reverting restores the carried state.
    Revive(PartState),
}

/// One historical version held in the current store.
///
/// Reverting it against its successor state yields the version whose lifespan
/// is `[old_st, commit_ts(txn))`. All changes one transaction makes to one part
/// are folded into a single record.
#[derive(Debug, Clone)]
pub struct UndoRecord {
    pub part: Part,
    pub action: UndoAction,
    pub old_st: Timestamp,
    pub txn: Arc<TxnState>,
}

impl UndoRecord {
    /// `[old_st, commit_ts)` once the superseding transaction committed.
    pub fn lifespan(&self) -> Option<Lifespan> {
        match (&self.action, self.txn.commit_ts()) {
            (UndoAction::Created, _) | (_, None) => None,
            (_, Some(ed)) => Some(Lifespan::new(self.old_st, ed)),
        }
    }

    pub(crate) fn revert(&self, slot: &mut Option<PartState>) {
        match &self.action {
            UndoAction::Created => *slot = None,
            UndoAction::Delta(d) => {
                if let Some(s) = slot.as_mut() {
                    d.apply(s).expect("undo delta part matches its slot");
                }
            }
            UndoAction::Revive(s) => *slot = Some(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    Vertex,
    Edge { src: Gid, dst: Gid },
}

/// Vertex or edge record in the current store.
#[derive(Debug)]
pub struct Object {
    pub gid: Gid,
    pub kind: ObjectKind,
    /// VP for vertices, EP for edges.
    pub main: PartSlot,
    /// VE, vertices only.
    pub adj: Option<PartSlot>,
    /// Newest first. Only the head may belong to an uncommitted transaction.
    pub chain: VecDeque<UndoRecord>,
}

/// Outcome of checking whether a transaction may modify an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteCheck {
    Ok,
    /// Created by a transaction outside the writer's snapshot.
    Invisible,
    /// Modified by a transaction outside the writer's snapshot.
    Conflict,
}

/// A part version as seen by a reader.
#[derive(Debug, Clone, PartialEq)]
pub struct SeenVersion {
    pub lifespan: Lifespan,
    pub state: PartState,
}

impl Object {
    pub fn new_vertex(gid: Gid, state: PartState, txn: &Arc<TxnState>) -> Self {
        Object {
            gid,
            kind: ObjectKind::Vertex,
            main: PartSlot {
                state: Some(state),
                st: Stamp::Pending(txn.clone()),
            },
            adj: Some(PartSlot {
                state: Some(PartState::Adj(Adjacency::default())),
                st: Stamp::Pending(txn.clone()),
            }),
            chain: VecDeque::from([UndoRecord {
                part: Part::Vp,
                action: UndoAction::Created,
                old_st: Timestamp::NEG_INF,
                txn: txn.clone(),
            }]),
        }
    }

    pub fn new_edge(gid: Gid, src: Gid, dst: Gid, state: PartState, txn: &Arc<TxnState>) -> Self {
        Object {
            gid,
            kind: ObjectKind::Edge { src, dst },
            main: PartSlot {
                state: Some(state),
                st: Stamp::Pending(txn.clone()),
            },
            adj: None,
            chain: VecDeque::from([UndoRecord {
                part: Part::Ep,
                action: UndoAction::Created,
                old_st: Timestamp::NEG_INF,
                txn: txn.clone(),
            }]),
        }
    }

    /// A committed object loaded from a checkpoint, with an empty chain.
    pub(crate) fn restored(
        gid: Gid,
        kind: ObjectKind,
        main: (Timestamp, PartState),
        adj: Option<(Timestamp, PartState)>,
    ) -> Self {
        let slot = |(st, state): (Timestamp, PartState)| PartSlot {
            state: Some(state),
            st: Stamp::At(st),
        };
        Object {
            gid,
            kind,
            main: slot(main),
            adj: adj.map(slot),
            chain: VecDeque::new(),
        }
    }

    /// Start stamp and state of each live part, if no transaction is pending.
    pub(crate) fn committed_parts(&self) -> Option<Vec<(Part, Timestamp, &PartState)>> {
        let mut out = Vec::new();
        for (part, slot) in [(self.main_part(), Some(&self.main)), (Part::Ve, self.adj.as_ref())] {
            let Some(slot) = slot else { continue };
            let st = match &slot.st {
                Stamp::At(t) => *t,
                Stamp::Pending(w) => w.commit_ts()?,
            };
            if let Some(s) = &slot.state {
                out.push((part, st, s));
            }
        }
        Some(out)
    }

    pub fn main_part(&self) -> Part {
        match self.kind {
            ObjectKind::Vertex => Part::Vp,
            ObjectKind::Edge { .. } => Part::Ep,
        }
    }

    pub fn slot(&self, part: Part) -> Option<&PartSlot> {
        if part == Part::Ve {
            self.adj.as_ref()
        } else if part == self.main_part() {
            Some(&self.main)
        } else {
            None
        }
    }

    fn slot_mut(&mut self, part: Part) -> &mut PartSlot {
        if part == Part::Ve {
            self.adj.as_mut().expect("adjacency slot on a vertex")
        } else {
            &mut self.main
        }
    }

    pub fn is_alive_in_place(&self) -> bool {
        self.main.state.is_some()
    }

    pub fn check_writable(&self, txn: &TxnState) -> WriteCheck {
        match self.chain.front() {
            Some(head) if !txn.sees(&head.txn) => match head.action {
                UndoAction::Created => WriteCheck::Invisible,
                _ => WriteCheck::Conflict,
            },
            _ => WriteCheck::Ok,
        }
    }

    fn created_by(&self, txn: &TxnState) -> bool {
        matches!(self.chain.back(), Some(u) if matches!(u.action, UndoAction::Created) && u.txn.id() == txn.id())
    }

    /// Returns the undo record `txn` already holds for `part`, creating one
    /// that remembers the pre-transaction start stamp if needed. `None` when
    /// the object was created by `txn` (its creation record covers everything).
    fn undo_for(&mut self, part: Part, txn: &Arc<TxnState>) -> Option<&mut UndoRecord> {
        if self.created_by(txn) {
            self.slot_mut(part).st = Stamp::Pending(txn.clone());
            return None;
        }
        let existing = self
            .chain
            .iter()
            .take_while(|u| u.txn.id() == txn.id())
            .position(|u| u.part == part);
        let idx = match existing {
            Some(i) => i,
            None => {
                let slot = self.slot_mut(part);
                let old_st = match &slot.st {
                    Stamp::At(t) => *t,
                    Stamp::Pending(w) => w
                        .commit_ts()
                        .expect("prior writer committed before a new write"),
                };
                slot.st = Stamp::Pending(txn.clone());
                self.chain.push_front(UndoRecord {
                    part,
                    action: UndoAction::Delta(PartDelta::empty_for(part)),
                    old_st,
                    txn: txn.clone(),
                });
                0
            }
        };
        self.chain.get_mut(idx)
    }

    /// Applies `f` to the live state of `part`, recording reverse changes via
    /// `remember` into this transaction's undo record for the part.
    pub fn modify<F>(&mut self, part: Part, txn: &Arc<TxnState>, f: F)
    where
        F: FnOnce(&mut PartState, Option<&mut PartDelta>),
    {
        // Take the state out so the undo record and the slot can be borrowed
        // independently.
        let mut state = self
            .slot_mut(part)
            .state
            .take()
            .expect("modify on a live part");
        match self.undo_for(part, txn) {
            Some(UndoRecord {
                action: UndoAction::Delta(d),
                ..
            }) => f(&mut state, Some(d)),
            Some(UndoRecord {
                action: UndoAction::Revive(_),
                ..
            }) => unreachable!("modify after the part was deleted"),
            _ => f(&mut state, None),
        }
        self.slot_mut(part).state = Some(state);
    }

    /// Kills `part`, keeping enough in the undo record to revive it.
    pub fn kill(&mut self, part: Part, txn: &Arc<TxnState>) {
        let mut state = self
            .slot_mut(part)
            .state
            .take()
            .expect("kill on a live part");
        if let Some(undo) = self.undo_for(part, txn) {
            // Restore the pre-transaction state before stashing it.
            if let UndoAction::Delta(d) = &undo.action {
                d.apply(&mut state).expect("undo delta part matches its slot");
            }
            undo.action = UndoAction::Revive(state);
        }
    }

    /// Stamps `commit_ts` over every start stamp still pending on `txn`.
    pub fn stamp_commit(&mut self, txn: &TxnState, commit_ts: Timestamp) {
        for slot in std::iter::once(&mut self.main).chain(self.adj.as_mut()) {
            if slot.st.is_pending_for(txn) {
                slot.st = Stamp::At(commit_ts);
            }
        }
    }

    /// Reverts and drops every undo record of `txn` at the head of the chain.
    /// Returns `false` when the object must disappear (its creation was undone).
    pub fn rollback(&mut self, txn: &TxnState) -> bool {
        while self
            .chain
            .front()
            .is_some_and(|u| u.txn.id() == txn.id())
        {
            let undo = self.chain.pop_front().unwrap();
            if let UndoAction::Created = undo.action {
                return false;
            }
            let slot = self.slot_mut(undo.part);
            undo.revert(&mut slot.state);
            slot.st = Stamp::At(undo.old_st);
        }
        true
    }

    /// Versions of `part` visible to `reader`, newest first.
    ///
    /// Undo records outside the reader's snapshot are reverted first; the
    /// remaining records each contribute one historical version. With
    /// `current_only` the walk stops after the snapshot's current version.
    /// `steps` counts undo records visited.
    pub fn versions(
        &self,
        part: Part,
        reader: &TxnState,
        current_only: bool,
        steps: &mut u64,
    ) -> Vec<SeenVersion> {
        let Some(slot) = self.slot(part) else {
            return Vec::new();
        };
        let mut state = slot.state.clone();
        let mut st = slot.st.resolve(reader);
        let mut chain = self.chain.iter().peekable();
        while let Some(u) = chain.peek() {
            if reader.sees(&u.txn) {
                break;
            }
            *steps += 1;
            if let UndoAction::Created = u.action {
                return Vec::new();
            }
            if u.part == part {
                u.revert(&mut state);
                st = u.old_st;
            }
            chain.next();
        }
        let mut out = Vec::new();
        if let Some(s) = &state {
            out.push(SeenVersion {
                lifespan: Lifespan::new(st, Timestamp::INF),
                state: s.clone(),
            });
        }
        if current_only {
            return out;
        }
        for u in chain {
            *steps += 1;
            if u.part != part {
                continue;
            }
            if let UndoAction::Created = u.action {
                break;
            }
            let ed = match u.txn.commit_ts() {
                Some(t) => t,
                None => reader.start_ts(),
            };
            u.revert(&mut state);
            if let Some(s) = &state {
                out.push(SeenVersion {
                    lifespan: Lifespan::new(u.old_st, ed),
                    state: s.clone(),
                });
            }
        }
        out
    }

    /// State of `part` after reverting the newest `depth` undo records of that
    /// part; `depth == 0` is the in-place state.
    pub fn reconstruct_at(&self, part: Part, depth: usize) -> Option<PartState> {
        let mut state = self.slot(part)?.state.clone();
        for u in self.chain.iter().filter(|u| u.part == part).take(depth) {
            u.revert(&mut state);
        }
        state
    }
}
