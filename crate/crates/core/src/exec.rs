//! Statement execution: a fixed scan, filter, expand, produce pipeline over
//! the merged current and historical stores.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use crate::counters::ReadCounters;
use crate::cypher::ast::*;
use crate::cypher::parse;
use crate::db::{Database, Transaction};
use crate::error::{Error, Result};
use crate::model::{refine_condition, Gid, LabelSet, Lifespan, PropertyMap, TimeCondition, Timestamp, Value};
use crate::state::{Direction, Part, PartState};
use crate::storage::SeenVersion;
use crate::txn::TxnState;

/// Read-only pseudo-properties exposing a version's lifespan.
pub const PSEUDO_ST: &str = "_st";
pub const PSEUDO_ED: &str = "_ed";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Time-slice versions must cover the whole window instead of
    /// overlapping it.
    pub strict_coverage: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeCell {
    pub gid: Gid,
    pub lifespan: Lifespan,
    pub labels: LabelSet,
    pub props: PropertyMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeCell {
    pub gid: Gid,
    pub lifespan: Lifespan,
    pub src: Gid,
    pub dst: Gid,
    pub edge_type: String,
    pub props: PropertyMap,
}

/// One output value: a scalar or a bound object version.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Value(Value),
    Node(NodeCell),
    Edge(EdgeCell),
}

impl Cell {
    pub const NULL: Cell = Cell::Value(Value::Null);

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Value> for Cell {
    fn from(v: Value) -> Self {
        Cell::Value(v)
    }
}

fn write_props(f: &mut fmt::Formatter<'_>, props: &PropertyMap) -> fmt::Result {
    if props.is_empty() {
        return Ok(());
    }
    f.write_str(" {")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}: {v}", Ident(k))?;
    }
    f.write_str("}")
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{v}"),
            Cell::Node(n) => {
                write!(f, "(#{}", n.gid)?;
                for l in &n.labels {
                    write!(f, ":{}", Ident(l))?;
                }
                write_props(f, &n.props)?;
                write!(f, ")@{}", n.lifespan)
            }
            Cell::Edge(e) => {
                write!(f, "[#{} {}->{} :{}", e.gid, e.src, e.dst, Ident(&e.edge_type))?;
                write_props(f, &e.props)?;
                write!(f, "]@{}", e.lifespan)
            }
        }
    }
}

/// Counts of changes made by a write statement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteStats {
    pub nodes_created: u64,
    pub edges_created: u64,
    pub properties_set: u64,
    pub nodes_deleted: u64,
    pub edges_deleted: u64,
}

#[derive(Debug, Clone, Default)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub counters: ReadCounters,
    pub stats: WriteStats,
    /// Set when an auto-committed write statement committed.
    pub commit_ts: Option<Timestamp>,
}

impl Database {
    /// Parses and runs one statement; writes commit on success.
    pub fn query(&self, text: &str) -> Result<QueryResult> {
        self.execute(&parse(text)?, ExecOptions::default())
    }

    /// Runs a statement in its own snapshot (reads) or transaction (writes).
    pub fn execute(&self, stmt: &Statement, opts: ExecOptions) -> Result<QueryResult> {
        if let Statement::Match(q) = stmt {
            let snap = self.snapshot();
            return run_match(self, &snap, q, opts);
        }
        let mut txn = self.begin();
        let mut res = execute_in(&mut txn, stmt, opts)?;
        res.commit_ts = Some(txn.commit()?);
        Ok(res)
    }
}

/// Runs a statement inside an open transaction. Reads see the
/// transaction's own uncommitted writes. A failed write aborts it.
pub fn execute_in(txn: &mut Transaction<'_>, stmt: &Statement, opts: ExecOptions) -> Result<QueryResult> {
    let db = txn.db();
    let reader = txn.state().clone();
    let r = match stmt {
        Statement::Match(q) => return run_match(db, &reader, q, opts),
        Statement::Create(c) => run_create(txn, &reader, c),
        Statement::Set(s) => run_set(txn, &reader, s),
        Statement::Delete(d) => run_delete(txn, &reader, d),
    };
    if r.is_err() {
        txn.rollback();
    }
    r
}

fn eval_error(msg: impl Into<String>) -> Error {
    Error::Eval(msg.into())
}

/// A bound object version. The state is shared between rows.
#[derive(Debug, Clone)]
enum Bound {
    Node {
        gid: Gid,
        v: Rc<SeenVersion>,
    },
    Edge {
        gid: Gid,
        src: Gid,
        dst: Gid,
        v: Rc<SeenVersion>,
    },
}

impl Bound {
    fn gid(&self) -> Gid {
        match self {
            Bound::Node { gid, .. } | Bound::Edge { gid, .. } => *gid,
        }
    }

    fn version(&self) -> &SeenVersion {
        match self {
            Bound::Node { v, .. } | Bound::Edge { v, .. } => v,
        }
    }

    fn to_cell(&self) -> Cell {
        match self {
            Bound::Node { gid, v } => {
                let PartState::Vertex(p) = &v.state else { unreachable!("nodes bind vertex states") };
                Cell::Node(NodeCell {
                    gid: *gid,
                    lifespan: v.lifespan,
                    labels: p.labels.clone(),
                    props: p.props.clone(),
                })
            }
            Bound::Edge { gid, src, dst, v } => {
                let PartState::Edge(p) = &v.state else { unreachable!("relationships bind edge states") };
                Cell::Edge(EdgeCell {
                    gid: *gid,
                    lifespan: v.lifespan,
                    src: *src,
                    dst: *dst,
                    edge_type: p.edge_type.clone(),
                    props: p.props.clone(),
                })
            }
        }
    }

    fn property(&self, key: &str) -> Value {
        let v = self.version();
        match key {
            PSEUDO_ST => ts_value(v.lifespan.st),
            PSEUDO_ED => ts_value(v.lifespan.ed),
            _ => v.state.props().and_then(|p| p.get(key)).cloned().unwrap_or(Value::Null),
        }
    }
}

/// Infinite bounds read as null.
fn ts_value(t: Timestamp) -> Value {
    if t.is_inf() || t == Timestamp::NEG_INF {
        Value::Null
    } else {
        Value::Int(t.0 as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Node,
    Rel,
}

/// Variable slots of one statement.
#[derive(Debug, Default)]
struct Scope {
    slots: HashMap<String, (usize, VarKind)>,
}

impl Scope {
    fn declare(&mut self, name: &str, kind: VarKind) -> Result<usize> {
        let n = self.slots.len();
        let &mut (slot, k) = self.slots.entry(name.to_string()).or_insert((n, kind));
        if k != kind {
            return Err(eval_error(format!("variable {name} is used as both a node and a relationship")));
        }
        Ok(slot)
    }

    fn slot(&self, name: &str) -> Option<usize> {
        self.slots.get(name).map(|(s, _)| *s)
    }

    fn kind(&self, name: &str) -> Option<VarKind> {
        self.slots.get(name).map(|(_, k)| *k)
    }

    fn len(&self) -> usize {
        self.slots.len()
    }

    fn check_expr(&self, e: &Expr) -> Result<()> {
        match e {
            Expr::Lit(_) => Ok(()),
            Expr::Var(v) | Expr::Prop(v, _) => match self.slot(v) {
                Some(_) => Ok(()),
                None => Err(eval_error(format!("variable {v} is not defined"))),
            },
            Expr::Call(_, args) => args.iter().try_for_each(|a| self.check_expr(a)),
            Expr::Not(a) | Expr::Neg(a) | Expr::IsNull(a, _) => self.check_expr(a),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                self.check_expr(a)?;
                self.check_expr(b)
            }
        }
    }

    /// Declares the variables of a MATCH clause in binding order, checking
    /// that inline property expressions only use earlier variables.
    fn bind_clause(&mut self, clause: &MatchClause) -> Result<()> {
        for p in &clause.patterns {
            self.bind_node(&p.start)?;
            for (r, n) in &p.steps {
                r.props.values().try_for_each(|e| self.check_expr(e))?;
                if let Some(v) = &r.var {
                    self.declare(v, VarKind::Rel)?;
                }
                self.bind_node(n)?;
            }
        }
        if let Some(w) = &clause.where_ {
            self.check_expr(w)?;
        }
        Ok(())
    }

    fn bind_node(&mut self, n: &NodePattern) -> Result<()> {
        n.props.values().try_for_each(|e| self.check_expr(e))?;
        if let Some(v) = &n.var {
            self.declare(v, VarKind::Node)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Row {
    slots: Vec<Option<Bound>>,
    /// Instants at which every bound version is live. `None` for
    /// current-state queries.
    window: Option<TimeCondition>,
}

impl Row {
    fn get(&self, scope: &Scope, name: &str) -> Result<&Bound> {
        scope
            .slot(name)
            .and_then(|s| self.slots[s].as_ref())
            .ok_or_else(|| eval_error(format!("variable {name} is not bound")))
    }

    fn bound(&self, scope: &Scope, name: &Option<String>) -> Option<&Bound> {
        name.as_ref()
            .and_then(|n| scope.slot(n))
            .and_then(|s| self.slots[s].as_ref())
    }

    fn bind(&mut self, scope: &Scope, name: &Option<String>, b: Bound) {
        if let Some(s) = name.as_ref().and_then(|n| scope.slot(n)) {
            self.slots[s] = Some(b);
        }
    }
}

struct Exec<'a> {
    db: &'a Database,
    reader: &'a TxnState,
    scope: Scope,
    opts: ExecOptions,
    counters: ReadCounters,
    /// Lazily computed scan candidates for unindexed node patterns.
    all_vertices: Option<Rc<Vec<Gid>>>,
}

impl<'a> Exec<'a> {
    fn new(db: &'a Database, reader: &'a TxnState, opts: ExecOptions) -> Self {
        Exec {
            db,
            reader,
            scope: Scope::default(),
            opts,
            counters: ReadCounters::default(),
            all_vertices: None,
        }
    }

    fn versions(&mut self, gid: Gid, part: Part, window: Option<TimeCondition>) -> Result<Vec<SeenVersion>> {
        let vs = self.db.part_versions(self.reader, gid, part, window, &mut self.counters)?;
        Ok(vs
            .into_iter()
            .map(|v| v.version)
            .filter(|v| self.admits(v.lifespan, window))
            .collect())
    }

    /// Extra filter applied in strict-coverage mode.
    fn admits(&self, lifespan: Lifespan, window: Option<TimeCondition>) -> bool {
        match window {
            Some(w) if self.opts.strict_coverage => lifespan.st <= w.t1 && lifespan.ed > w.t2,
            _ => true,
        }
    }

    fn candidates(&mut self, np: &NodePattern, temporal: bool) -> Result<Rc<Vec<Gid>>> {
        if !temporal || self.db.current().index_is_complete() {
            for (k, e) in &np.props {
                let Expr::Lit(v) = e else { continue };
                if v.is_null() {
                    continue;
                }
                let mut gids = BTreeSet::new();
                for key in numeric_aliases(v) {
                    gids.extend(self.db.current().vertices_ever_with(k, &key).iter().map(|o| o.read().gid));
                }
                return Ok(Rc::new(gids.into_iter().collect()));
            }
        }
        if let Some(all) = &self.all_vertices {
            return Ok(all.clone());
        }
        let gids = if temporal {
            self.db.vertex_gids_with_history()
        } else {
            self.db.current().vertex_refs().iter().map(|o| o.read().gid).collect()
        };
        let all = Rc::new(gids);
        self.all_vertices = Some(all.clone());
        Ok(all)
    }

    fn node_matches(&self, np: &NodePattern, state: &PartState, row: &Row) -> Result<bool> {
        let PartState::Vertex(p) = state else { return Ok(false) };
        if !np.labels.iter().all(|l| p.labels.contains(l)) {
            return Ok(false);
        }
        props_match(self, &np.props, &p.props, row)
    }

    fn rel_matches(&self, rp: &RelPattern, state: &PartState, row: &Row) -> Result<bool> {
        let PartState::Edge(p) = state else { return Ok(false) };
        if rp.rel_type.as_ref().is_some_and(|t| *t != p.edge_type) {
            return Ok(false);
        }
        props_match(self, &rp.props, &p.props, row)
    }

    fn match_clause(&mut self, clause: &MatchClause, cond: Option<TimeCondition>) -> Result<Vec<Row>> {
        let mut rows = vec![Row {
            slots: vec![None; self.scope.len()],
            window: cond,
        }];
        for p in &clause.patterns {
            let mut next = Vec::new();
            for row in rows {
                next.extend(self.match_pattern(p, row)?);
            }
            rows = next;
        }
        if let Some(w) = &clause.where_ {
            let mut kept = Vec::with_capacity(rows.len());
            for row in rows {
                if truth(&self.eval(w, &row)?)? == Some(true) {
                    kept.push(row);
                }
            }
            rows = kept;
        }
        Ok(rows)
    }

    fn match_pattern(&mut self, p: &Pattern, row: Row) -> Result<Vec<Row>> {
        let mut frontier = self.bind_start(&p.start, row)?;
        for (rel, node) in &p.steps {
            let mut next = Vec::new();
            for (gid, row) in frontier {
                next.extend(self.expand(gid, rel, node, row)?);
            }
            frontier = next;
        }
        Ok(frontier.into_iter().map(|(_, r)| r).collect())
    }

    fn bind_start(&mut self, np: &NodePattern, row: Row) -> Result<Vec<(Gid, Row)>> {
        if let Some(b) = row.bound(&self.scope, &np.var) {
            let gid = b.gid();
            let ok = self.node_matches(np, &b.version().state, &row)?;
            return Ok(if ok { vec![(gid, row)] } else { Vec::new() });
        }
        let temporal = row.window.is_some();
        let mut out = Vec::new();
        for &gid in self.candidates(np, temporal)?.iter() {
            for v in self.versions(gid, Part::Vp, row.window)? {
                if !self.node_matches(np, &v.state, &row)? {
                    continue;
                }
                let mut r = row.clone();
                r.window = narrow(row.window, v.lifespan);
                r.bind(&self.scope, &np.var, Bound::Node { gid, v: Rc::new(v) });
                out.push((gid, r));
            }
        }
        Ok(out)
    }

    /// Follows `rel` from vertex `gid` to versions of matching neighbours.
    fn expand(&mut self, gid: Gid, rel: &RelPattern, np: &NodePattern, row: Row) -> Result<Vec<(Gid, Row)>> {
        // Adjacency entries of the vertex in the window, each with the hull
        // of the windows refined by the adjacency versions that hold it.
        let mut entries: BTreeMap<(Gid, Gid, Direction), Option<TimeCondition>> = BTreeMap::new();
        for ve in self.versions(gid, Part::Ve, row.window)? {
            let w = narrow(row.window, ve.lifespan);
            let Some(adj) = ve.state.as_adj() else { continue };
            let dirs: &[Direction] = match rel.direction {
                RelDirection::Out => &[Direction::Out],
                RelDirection::In => &[Direction::In],
                RelDirection::Both => &[Direction::Out, Direction::In],
            };
            for &d in dirs {
                for e in adj.list(d) {
                    entries
                        .entry((e.edge, e.neighbor, d))
                        .and_modify(|h| *h = hull(*h, w))
                        .or_insert(w);
                }
            }
        }

        let bound_rel = row.bound(&self.scope, &rel.var).cloned();
        let bound_node = row.bound(&self.scope, &np.var).cloned();
        let mut seen: HashSet<(Gid, Lifespan, Lifespan)> = HashSet::new();
        let mut out = Vec::new();
        for ((edge, neighbor, dir), w) in entries {
            if bound_rel.as_ref().is_some_and(|b| b.gid() != edge) {
                continue;
            }
            if bound_node.as_ref().is_some_and(|b| b.gid() != neighbor) {
                continue;
            }
            let (src, dst) = match dir {
                Direction::Out => (gid, neighbor),
                Direction::In => (neighbor, gid),
            };
            for ev in self.versions(edge, Part::Ep, w)? {
                if bound_rel.as_ref().is_some_and(|b| b.version().lifespan != ev.lifespan) {
                    continue;
                }
                if !self.rel_matches(rel, &ev.state, &row)? {
                    continue;
                }
                let w_edge = narrow(w, ev.lifespan);
                let neighbours = match &bound_node {
                    Some(b) => {
                        let v = b.version();
                        let live = w_edge.is_none_or(|w| crate::model::legal_check(v.lifespan, w));
                        if live && self.admits(v.lifespan, w_edge) {
                            vec![v.clone()]
                        } else {
                            Vec::new()
                        }
                    }
                    None => self.versions(neighbor, Part::Vp, w_edge)?,
                };
                let ev = Rc::new(ev);
                for nv in neighbours {
                    if !seen.insert((edge, ev.lifespan, nv.lifespan)) {
                        continue;
                    }
                    if !self.node_matches(np, &nv.state, &row)? {
                        continue;
                    }
                    let mut r = row.clone();
                    r.window = narrow(narrow(row.window, ev.lifespan), nv.lifespan);
                    r.bind(
                        &self.scope,
                        &rel.var,
                        Bound::Edge {
                            gid: edge,
                            src,
                            dst,
                            v: ev.clone(),
                        },
                    );
                    r.bind(
                        &self.scope,
                        &np.var,
                        Bound::Node {
                            gid: neighbor,
                            v: Rc::new(nv),
                        },
                    );
                    out.push((neighbor, r));
                }
            }
        }
        Ok(out)
    }

    fn eval(&self, e: &Expr, row: &Row) -> Result<Cell> {
        Ok(match e {
            Expr::Lit(v) => Cell::Value(v.clone()),
            Expr::Var(v) => row.get(&self.scope, v)?.to_cell(),
            Expr::Prop(v, k) => Cell::Value(row.get(&self.scope, v)?.property(k)),
            Expr::Call(name, args) => self.call(name, args, row)?,
            Expr::Not(a) => bool_cell(truth(&self.eval(a, row)?)?.map(|b| !b)),
            Expr::And(a, b) => {
                let l = truth(&self.eval(a, row)?)?;
                if l == Some(false) {
                    return Ok(bool_cell(Some(false)));
                }
                let r = truth(&self.eval(b, row)?)?;
                bool_cell(match (l, r) {
                    (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                })
            }
            Expr::Or(a, b) => {
                let l = truth(&self.eval(a, row)?)?;
                if l == Some(true) {
                    return Ok(bool_cell(Some(true)));
                }
                let r = truth(&self.eval(b, row)?)?;
                bool_cell(match (l, r) {
                    (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                })
            }
            Expr::Cmp(op, a, b) => bool_cell(compare(*op, &self.eval(a, row)?, &self.eval(b, row)?)?),
            Expr::Arith(op, a, b) => Cell::Value(arith(*op, scalar(self.eval(a, row)?)?, scalar(self.eval(b, row)?)?)?),
            Expr::Neg(a) => Cell::Value(match scalar(self.eval(a, row)?)? {
                Value::Null => Value::Null,
                Value::Int(i) => Value::Int(i.checked_neg().ok_or_else(|| eval_error("integer overflow"))?),
                Value::Float(x) => Value::Float(-x),
                v => return Err(eval_error(format!("cannot negate a {}", v.type_name()))),
            }),
            Expr::IsNull(a, negated) => {
                let null = self.eval(a, row)? == Cell::NULL;
                Cell::Value(Value::Bool(null != *negated))
            }
        })
    }

    fn call(&self, name: &str, args: &[Expr], row: &Row) -> Result<Cell> {
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(eval_error(format!("{name}() takes {n} argument(s), got {}", args.len())))
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "now" => {
                arity(0)?;
                Ok(Cell::Value(Value::Int(self.reader.start_ts().0 as i64)))
            }
            "id" => {
                arity(1)?;
                match self.eval(&args[0], row)? {
                    Cell::Node(n) => Ok(Cell::Value(Value::Int(n.gid.0 as i64))),
                    Cell::Edge(e) => Ok(Cell::Value(Value::Int(e.gid.0 as i64))),
                    Cell::Value(Value::Null) => Ok(Cell::NULL),
                    Cell::Value(v) => Err(eval_error(format!("id() expects a node or relationship, got {}", v.type_name()))),
                }
            }
            "type" => {
                arity(1)?;
                match self.eval(&args[0], row)? {
                    Cell::Edge(e) => Ok(Cell::Value(Value::Str(e.edge_type))),
                    Cell::Value(Value::Null) => Ok(Cell::NULL),
                    _ => Err(eval_error("type() expects a relationship")),
                }
            }
            _ => Err(eval_error(format!("unknown function {name}()"))),
        }
    }

    /// Evaluates a temporal bound; only constants and `now()` are allowed.
    fn timestamp(&self, e: &Expr) -> Result<Timestamp> {
        let row = Row {
            slots: Vec::new(),
            window: None,
        };
        match self.eval(e, &row)? {
            Cell::Value(Value::Int(i)) if i >= 0 => Ok(Timestamp(i as u64)),
            Cell::Value(Value::Int(i)) => Err(eval_error(format!("timestamp {i} is negative"))),
            Cell::Value(v) => Err(eval_error(format!("timestamp must be an integer, got {}", v.type_name()))),
            _ => Err(eval_error("timestamp must be an integer")),
        }
    }

    fn condition(&self, t: &TemporalClause) -> Result<TimeCondition> {
        let empty = Scope::default();
        let (a, b) = match t {
            TemporalClause::AsOf(e) => (e, e),
            TemporalClause::FromTo(a, b) => (a, b),
        };
        empty.check_expr(a)?;
        empty.check_expr(b)?;
        let (t1, t2) = (self.timestamp(a)?, self.timestamp(b)?);
        TimeCondition::new(t1, t2).ok_or(Error::InvalidRange { t1, t2 })
    }

    fn value_of(&self, e: &Expr, row: &Row) -> Result<Value> {
        match self.eval(e, row)? {
            Cell::Value(v) => Ok(v),
            _ => Err(eval_error("property values must be scalars")),
        }
    }
}

/// Index keys that compare equal to `v`.
fn numeric_aliases(v: &Value) -> Vec<Value> {
    let mut out = vec![v.clone()];
    match *v {
        Value::Int(i) => out.push(Value::Float(i as f64)),
        Value::Float(x) if x.fract() == 0.0 && x.abs() < 9.2e18 => out.push(Value::Int(x as i64)),
        _ => {}
    }
    out
}

fn props_match(ex: &Exec<'_>, want: &BTreeMap<String, Expr>, have: &PropertyMap, row: &Row) -> Result<bool> {
    for (k, e) in want {
        let actual = match k.as_str() {
            PSEUDO_ST | PSEUDO_ED => return Err(eval_error(format!("{k} cannot be used in a pattern"))),
            _ => have.get(k).cloned().unwrap_or(Value::Null),
        };
        let expected = ex.eval(e, row)?;
        if compare(CmpOp::Eq, &Cell::Value(actual), &expected)? != Some(true) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn narrow(window: Option<TimeCondition>, lifespan: Lifespan) -> Option<TimeCondition> {
    window.map(|w| refine_condition(w, lifespan).expect("version was legal in the window"))
}

fn hull(a: Option<TimeCondition>, b: Option<TimeCondition>) -> Option<TimeCondition> {
    match (a, b) {
        (Some(a), Some(b)) => Some(TimeCondition {
            t1: a.t1.min(b.t1),
            t2: a.t2.max(b.t2),
        }),
        _ => None,
    }
}

fn bool_cell(b: Option<bool>) -> Cell {
    Cell::Value(b.map_or(Value::Null, Value::Bool))
}

fn truth(c: &Cell) -> Result<Option<bool>> {
    match c {
        Cell::Value(Value::Null) => Ok(None),
        Cell::Value(Value::Bool(b)) => Ok(Some(*b)),
        Cell::Value(v) => Err(eval_error(format!("expected a boolean, got {}", v.type_name()))),
        _ => Err(eval_error("expected a boolean, got an object")),
    }
}

fn scalar(c: Cell) -> Result<Value> {
    match c {
        Cell::Value(v) => Ok(v),
        _ => Err(eval_error("arithmetic on a node or relationship")),
    }
}

/// Three-valued comparison. Numbers compare across int and float; other
/// mixed types are unequal and unordered.
fn compare(op: CmpOp, a: &Cell, b: &Cell) -> Result<Option<bool>> {
    use std::cmp::Ordering;
    if *a == Cell::NULL || *b == Cell::NULL {
        return Ok(None);
    }
    let ord: Option<Ordering> = match (a, b) {
        (Cell::Value(x), Cell::Value(y)) => match (x, y) {
            (Value::Int(i), Value::Int(j)) => Some(i.cmp(j)),
            (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
                let f = |v: &Value| match *v {
                    Value::Int(i) => i as f64,
                    Value::Float(x) => x,
                    _ => unreachable!(),
                };
                match f(x).partial_cmp(&f(y)) {
                    Some(o) => Some(o),
                    // NaN: unequal and unordered, never an error.
                    None => return Ok(Some(op == CmpOp::Ne)),
                }
            }
            (Value::Str(s), Value::Str(t)) => Some(s.cmp(t)),
            (Value::Bool(s), Value::Bool(t)) => Some(s.cmp(t)),
            _ => None,
        },
        (Cell::Node(x), Cell::Node(y)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
            Some(if (x.gid, x.lifespan) == (y.gid, y.lifespan) { Ordering::Equal } else { Ordering::Less })
        }
        (Cell::Edge(x), Cell::Edge(y)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
            Some(if (x.gid, x.lifespan) == (y.gid, y.lifespan) { Ordering::Equal } else { Ordering::Less })
        }
        _ => None,
    };
    let Some(ord) = ord else {
        return match op {
            CmpOp::Eq => Ok(Some(false)),
            CmpOp::Ne => Ok(Some(true)),
            _ => Err(eval_error(format!("cannot order {} and {}", cell_type(a), cell_type(b)))),
        };
    };
    Ok(Some(match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => ord.is_ne(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
    }))
}

fn cell_type(c: &Cell) -> &'static str {
    match c {
        Cell::Value(v) => v.type_name(),
        Cell::Node(_) => "node",
        Cell::Edge(_) => "relationship",
    }
}

fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value> {
    let overflow = || eval_error("integer overflow");
    Ok(match (a, b) {
        (Value::Null, _) | (_, Value::Null) => Value::Null,
        (Value::Int(x), Value::Int(y)) => Value::Int(match op {
            ArithOp::Add => x.checked_add(y).ok_or_else(overflow)?,
            ArithOp::Sub => x.checked_sub(y).ok_or_else(overflow)?,
            ArithOp::Mul => x.checked_mul(y).ok_or_else(overflow)?,
            ArithOp::Div | ArithOp::Mod if y == 0 => return Err(eval_error("division by zero")),
            ArithOp::Div => x.checked_div(y).ok_or_else(overflow)?,
            ArithOp::Mod => x.checked_rem(y).ok_or_else(overflow)?,
        }),
        (x @ (Value::Int(_) | Value::Float(_)), y @ (Value::Int(_) | Value::Float(_))) => {
            let f = |v: Value| match v {
                Value::Int(i) => i as f64,
                Value::Float(x) => x,
                _ => unreachable!(),
            };
            let (x, y) = (f(x), f(y));
            Value::Float(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
                ArithOp::Mod => x % y,
            })
        }
        (Value::Str(x), Value::Str(y)) if op == ArithOp::Add => Value::Str(x + &y),
        (x, y) => {
            return Err(eval_error(format!(
                "cannot apply {} to {} and {}",
                op.symbol(),
                x.type_name(),
                y.type_name()
            )))
        }
    })
}

fn run_match(db: &Database, reader: &TxnState, q: &MatchQuery, opts: ExecOptions) -> Result<QueryResult> {
    let mut ex = Exec::new(db, reader, opts);
    ex.scope.bind_clause(&q.clause)?;
    for item in &q.returns {
        ex.scope.check_expr(&item.expr)?;
    }
    let cond = q.temporal.as_ref().map(|t| ex.condition(t)).transpose()?;
    let rows = ex.match_clause(&q.clause, cond)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        out.push(q.returns.iter().map(|i| ex.eval(&i.expr, row)).collect::<Result<Vec<_>>>()?);
    }
    Ok(QueryResult {
        columns: q.returns.iter().map(ReturnItem::column_name).collect(),
        rows: out,
        counters: ex.counters,
        ..Default::default()
    })
}

/// Rows of the binding MATCH of a write statement, read in the writer's snapshot.
fn bind_rows<'a>(db: &'a Database, reader: &'a TxnState, clause: Option<&MatchClause>) -> Result<(Exec<'a>, Vec<Row>)> {
    let mut ex = Exec::new(db, reader, ExecOptions::default());
    let rows = match clause {
        Some(c) => {
            ex.scope.bind_clause(c)?;
            ex.match_clause(c, None)?
        }
        None => vec![Row {
            slots: Vec::new(),
            window: None,
        }],
    };
    Ok((ex, rows))
}

fn check_writable_key(k: &str) -> Result<()> {
    if k == PSEUDO_ST || k == PSEUDO_ED {
        return Err(eval_error(format!("{k} is read-only")));
    }
    Ok(())
}

fn eval_props(ex: &Exec<'_>, props: &BTreeMap<String, Expr>, row: &Row) -> Result<PropertyMap> {
    let mut out = PropertyMap::new();
    for (k, e) in props {
        check_writable_key(k)?;
        let v = ex.value_of(e, row)?;
        if !v.is_null() {
            out.insert(k.clone(), v);
        }
    }
    Ok(out)
}

fn run_create(txn: &mut Transaction<'_>, reader: &TxnState, c: &CreateStmt) -> Result<QueryResult> {
    let db = txn.db();
    let (mut ex, rows) = bind_rows(db, reader, c.bind.as_ref())?;
    // Variables introduced by CREATE live in the same scope, after the bound ones.
    let bound_count = ex.scope.len();
    for p in &c.patterns {
        for n in p.nodes() {
            if let Some(v) = &n.var {
                ex.scope.declare(v, VarKind::Node)?;
            }
            n.props.values().try_for_each(|e| ex.scope.check_expr(e))?;
        }
        for (r, _) in &p.steps {
            if let Some(v) = &r.var {
                if ex.scope.slot(v).is_some() {
                    return Err(eval_error(format!("relationship variable {v} is already defined")));
                }
                ex.scope.declare(v, VarKind::Rel)?;
            }
            r.props.values().try_for_each(|e| ex.scope.check_expr(e))?;
            if r.rel_type.is_none() {
                return Err(eval_error("CREATE needs a relationship type"));
            }
            if r.direction == RelDirection::Both {
                return Err(eval_error("CREATE needs a relationship direction"));
            }
        }
    }

    let mut stats = WriteStats::default();
    for mut row in rows {
        row.slots.resize(ex.scope.len(), None);
        let mut made: HashMap<String, Gid> = HashMap::new();
        for p in &c.patterns {
            let mut prev = create_node(txn, &ex, &p.start, &row, &mut made, bound_count, &mut stats)?;
            for (r, n) in &p.steps {
                let next = create_node(txn, &ex, n, &row, &mut made, bound_count, &mut stats)?;
                let props = eval_props(&ex, &r.props, &row)?;
                let (src, dst) = match r.direction {
                    RelDirection::In => (next, prev),
                    _ => (prev, next),
                };
                let ty = r.rel_type.as_deref().expect("checked above");
                let gid = txn.create_edge(src, dst, ty, props)?;
                if let Some(v) = &r.var {
                    made.insert(v.clone(), gid);
                }
                stats.edges_created += 1;
                prev = next;
            }
        }
    }
    Ok(QueryResult {
        stats,
        counters: ex.counters,
        ..Default::default()
    })
}

fn create_node(
    txn: &mut Transaction<'_>,
    ex: &Exec<'_>,
    n: &NodePattern,
    row: &Row,
    made: &mut HashMap<String, Gid>,
    bound_count: usize,
    stats: &mut WriteStats,
) -> Result<Gid> {
    if let Some(v) = &n.var {
        let existing = made.get(v).copied().or_else(|| {
            let slot = ex.scope.slot(v)?;
            (slot < bound_count).then(|| row.slots[slot].as_ref().map(Bound::gid))?
        });
        if let Some(gid) = existing {
            if !n.labels.is_empty() || !n.props.is_empty() {
                return Err(eval_error(format!("variable {v} is already defined")));
            }
            if ex.scope.kind(v) != Some(VarKind::Node) {
                return Err(eval_error(format!("{v} is not a node")));
            }
            return Ok(gid);
        }
    }
    let props = eval_props(ex, &n.props, row)?;
    let gid = txn.create_vertex(n.labels.iter().cloned().collect(), props)?;
    if let Some(v) = &n.var {
        made.insert(v.clone(), gid);
    }
    stats.nodes_created += 1;
    Ok(gid)
}

fn run_set(txn: &mut Transaction<'_>, reader: &TxnState, s: &SetStmt) -> Result<QueryResult> {
    let db = txn.db();
    let (ex, rows) = bind_rows(db, reader, Some(&s.bind))?;
    for item in &s.items {
        ex.scope.check_expr(&Expr::Var(item.var.clone()))?;
        ex.scope.check_expr(&item.value)?;
        check_writable_key(&item.key)?;
    }
    let mut stats = WriteStats::default();
    for row in &rows {
        let mut changes: BTreeMap<Gid, PropertyMap> = BTreeMap::new();
        for item in &s.items {
            let gid = row.get(&ex.scope, &item.var)?.gid();
            let v = ex.value_of(&item.value, row)?;
            changes.entry(gid).or_default().insert(item.key.clone(), v);
            stats.properties_set += 1;
        }
        for (gid, m) in changes {
            txn.set_properties(gid, m)?;
        }
    }
    Ok(QueryResult {
        stats,
        counters: ex.counters,
        ..Default::default()
    })
}

fn run_delete(txn: &mut Transaction<'_>, reader: &TxnState, d: &DeleteStmt) -> Result<QueryResult> {
    let db = txn.db();
    let (mut ex, rows) = bind_rows(db, reader, Some(&d.bind))?;
    for v in &d.vars {
        ex.scope.check_expr(&Expr::Var(v.clone()))?;
    }
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for row in &rows {
        for v in &d.vars {
            match row.get(&ex.scope, v)? {
                Bound::Node { gid, .. } => nodes.insert(*gid),
                Bound::Edge { gid, .. } => edges.insert(*gid),
            };
        }
    }
    let mut stats = WriteStats::default();
    for &e in &edges {
        txn.delete_edge(e)?;
        stats.edges_deleted += 1;
    }
    for &n in &nodes {
        if !d.detach {
            let adj = db.part_versions(reader, n, Part::Ve, None, &mut ex.counters)?;
            let attached = adj.iter().any(|v| v.version.state.as_adj().is_some_and(|a| !a.is_empty()));
            if attached {
                return Err(eval_error(format!(
                    "vertex {n} still has relationships; use DETACH DELETE"
                )));
            }
        }
        txn.delete_vertex(n)?;
        stats.nodes_deleted += 1;
    }
    Ok(QueryResult {
        stats,
        counters: ex.counters,
        ..Default::default()
    })
}
