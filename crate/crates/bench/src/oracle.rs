//! Reference model: every version of every object in plain vectors, and a
//! brute-force evaluator that enumerates all version combinations.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use tempograph::cypher::ast::{ArithOp, CmpOp, Expr, MatchQuery, NodePattern, RelDirection, RelPattern, Statement, TemporalClause};
use tempograph::exec::{EdgeCell, NodeCell, PSEUDO_ED, PSEUDO_ST};
use tempograph::model::{LabelSet, PropertyMap};
use tempograph::{Cell, Gid, Lifespan, Timestamp, Value};

/// A workload op with symbols resolved to ids.
#[derive(Debug, Clone)]
pub enum ResolvedOp {
    CreateVertex { gid: Gid, labels: LabelSet, props: PropertyMap },
    CreateEdge { gid: Gid, src: Gid, dst: Gid, edge_type: String, props: PropertyMap },
    Update { gid: Gid, changes: PropertyMap },
    DeleteVertex { gid: Gid },
    DeleteEdge { gid: Gid },
}

#[derive(Debug, Clone)]
enum Kind {
    Vertex,
    Edge { src: Gid, dst: Gid },
}

#[derive(Debug, Clone)]
struct Version {
    lifespan: Lifespan,
    /// Labels for vertices, the single type for edges.
    labels: LabelSet,
    props: PropertyMap,
}

#[derive(Debug, Clone)]
struct Obj {
    kind: Kind,
    versions: Vec<Version>,
}

impl Obj {
    fn live(&self) -> Option<&Version> {
        self.versions.last().filter(|v| v.lifespan.is_current())
    }
}

#[derive(Debug, Clone, Default)]
pub struct NaiveOracle {
    objects: BTreeMap<Gid, Obj>,
    /// Every edge ever attached to a vertex.
    incident: BTreeMap<Gid, Vec<Gid>>,
    commits: Vec<Timestamp>,
    /// Windows are clamped to start here, as after a retention purge.
    horizon: Timestamp,
}

/// Pending state of one object inside a group.
struct Pending {
    created: bool,
    deleted: bool,
    labels: LabelSet,
    props: PropertyMap,
}

impl NaiveOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn commits(&self) -> &[Timestamp] {
        &self.commits
    }

    pub fn version_count(&self) -> usize {
        self.objects.values().map(|o| o.versions.len()).sum()
    }

    /// Ids of vertices live now.
    pub fn live_vertices(&self) -> Vec<Gid> {
        self.objects
            .iter()
            .filter(|(_, o)| matches!(o.kind, Kind::Vertex) && o.live().is_some())
            .map(|(g, _)| *g)
            .collect()
    }

    /// Vertices and edges that existed once and are deleted now.
    pub fn dead_objects(&self) -> (Vec<Gid>, Vec<Gid>) {
        let mut out = (Vec::new(), Vec::new());
        for (g, o) in &self.objects {
            if o.live().is_some() {
                continue;
            }
            match o.kind {
                Kind::Vertex => out.0.push(*g),
                Kind::Edge { .. } => out.1.push(*g),
            }
        }
        out
    }

    /// `id` property values any vertex ever had.
    pub fn vertex_ids(&self) -> Vec<i64> {
        let mut ids: Vec<i64> = self
            .objects
            .values()
            .filter(|o| matches!(o.kind, Kind::Vertex))
            .flat_map(|o| o.versions.iter())
            .filter_map(|v| match v.props.get("id") {
                Some(Value::Int(i)) => Some(*i),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn set_horizon(&mut self, h: Timestamp) {
        self.horizon = h;
    }

    /// Records one committed group. Every part the group touched gets one
    /// new version starting at `ts`.
    pub fn apply_group(&mut self, ts: Timestamp, ops: &[ResolvedOp]) {
        let mut pending: BTreeMap<Gid, Pending> = BTreeMap::new();
        let base = |objects: &BTreeMap<Gid, Obj>, gid: Gid| {
            let v = objects[&gid].live().expect("touched object is live");
            Pending {
                created: false,
                deleted: false,
                labels: v.labels.clone(),
                props: v.props.clone(),
            }
        };
        for op in ops {
            match op {
                ResolvedOp::CreateVertex { gid, labels, props } => {
                    self.objects.insert(*gid, Obj { kind: Kind::Vertex, versions: Vec::new() });
                    pending.insert(*gid, Pending { created: true, deleted: false, labels: labels.clone(), props: clean(props) });
                }
                ResolvedOp::CreateEdge { gid, src, dst, edge_type, props } => {
                    self.objects.insert(*gid, Obj { kind: Kind::Edge { src: *src, dst: *dst }, versions: Vec::new() });
                    self.incident.entry(*src).or_default().push(*gid);
                    if src != dst {
                        self.incident.entry(*dst).or_default().push(*gid);
                    }
                    pending.insert(
                        *gid,
                        Pending {
                            created: true,
                            deleted: false,
                            labels: std::iter::once(edge_type.clone()).collect(),
                            props: clean(props),
                        },
                    );
                }
                ResolvedOp::Update { gid, changes } => {
                    let p = pending.entry(*gid).or_insert_with(|| base(&self.objects, *gid));
                    for (k, v) in changes {
                        if v.is_null() {
                            p.props.remove(k);
                        } else {
                            p.props.insert(k.clone(), v.clone());
                        }
                    }
                }
                ResolvedOp::DeleteEdge { gid } => {
                    pending.entry(*gid).or_insert_with(|| base(&self.objects, *gid)).deleted = true;
                }
                ResolvedOp::DeleteVertex { gid } => {
                    let edges: Vec<Gid> = self
                        .incident
                        .get(gid)
                        .into_iter()
                        .flatten()
                        .copied()
                        .filter(|g| {
                            self.objects.get(g).is_some_and(|o| o.live().is_some())
                                || pending.get(g).is_some_and(|p| p.created && !p.deleted)
                        })
                        .filter(|g| !pending.get(g).is_some_and(|p| p.deleted))
                        .collect();
                    for e in edges {
                        pending.entry(e).or_insert_with(|| base(&self.objects, e)).deleted = true;
                    }
                    pending.entry(*gid).or_insert_with(|| base(&self.objects, *gid)).deleted = true;
                }
            }
        }
        for (gid, p) in pending {
            let obj = self.objects.get_mut(&gid).expect("pending object exists");
            if !p.created {
                let last = obj.versions.last_mut().expect("existing object has a version");
                last.lifespan.ed = ts;
            }
            if p.created && p.deleted {
                if let Kind::Edge { src, dst } = obj.kind {
                    for v in [src, dst] {
                        if let Some(list) = self.incident.get_mut(&v) {
                            list.retain(|e| *e != gid);
                        }
                    }
                }
                self.objects.remove(&gid);
                continue;
            }
            if !p.deleted {
                obj.versions.push(Version {
                    lifespan: Lifespan::open(ts),
                    labels: p.labels,
                    props: p.props,
                });
            }
        }
        self.commits.push(ts);
    }

    fn cell(&self, gid: Gid, v: &Version) -> Cell {
        match self.objects[&gid].kind {
            Kind::Vertex => Cell::Node(NodeCell {
                gid,
                lifespan: v.lifespan,
                labels: v.labels.clone(),
                props: v.props.clone(),
            }),
            Kind::Edge { src, dst } => Cell::Edge(EdgeCell {
                gid,
                lifespan: v.lifespan,
                src,
                dst,
                edge_type: v.labels.iter().next().cloned().unwrap_or_default(),
                props: v.props.clone(),
            }),
        }
    }

    /// Evaluates a MATCH query by enumerating every combination of versions.
    /// `now` is the reader's start timestamp. Rows come back sorted.
    pub fn evaluate(&self, stmt: &Statement, now: Timestamp) -> Result<Vec<Vec<Cell>>, String> {
        let Statement::Match(q) = stmt else {
            return Err("only MATCH queries are supported".into());
        };
        let cond = match &q.temporal {
            None => None,
            Some(t) => {
                let (a, b) = match t {
                    TemporalClause::AsOf(e) => (e, e),
                    TemporalClause::FromTo(a, b) => (a, b),
                };
                let (t1, t2) = (const_ts(a, now)?, const_ts(b, now)?);
                if t1 > t2 {
                    return Err(format!("invalid range {t1} > {t2}"));
                }
                let t1 = t1.max(self.horizon.0);
                if t1 > t2 {
                    return Ok(Vec::new());
                }
                Some((t1, t2))
            }
        };
        let mut ctx = Ctx { o: self, q, now, rows: Vec::new() };
        let mut slots = Vec::new();
        let items = flatten(q);
        ctx.search(&items, 0, cond, &mut slots)?;
        let mut rows = ctx.rows;
        rows.sort();
        Ok(rows)
    }

    /// Candidate versions of `gid` for a window.
    fn versions(&self, gid: Gid, window: Option<(u64, u64)>) -> impl Iterator<Item = &Version> {
        self.objects[&gid].versions.iter().filter(move |v| match window {
            None => v.lifespan.is_current(),
            Some(w) => narrow(w, v.lifespan).is_some(),
        })
    }
}

fn clean(p: &PropertyMap) -> PropertyMap {
    p.iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn const_ts(e: &Expr, now: Timestamp) -> Result<u64, String> {
    let v = match e {
        Expr::Lit(v) => v.clone(),
        Expr::Call(f, a) if f.eq_ignore_ascii_case("now") && a.is_empty() => Value::Int(now.0 as i64),
        Expr::Arith(op, a, b) => {
            let (a, b) = (const_ts(a, now)? as i64, const_ts(b, now)? as i64);
            Value::Int(match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                _ => return Err("unsupported timestamp expression".into()),
            })
        }
        _ => return Err("unsupported timestamp expression".into()),
    };
    match v {
        Value::Int(i) if i >= 0 => Ok(i as u64),
        v => Err(format!("bad timestamp {v}")),
    }
}

/// Closed window `[t1, t2]` cut down to the instants inside `l`.
fn narrow(w: (u64, u64), l: Lifespan) -> Option<(u64, u64)> {
    let t1 = w.0.max(l.st.0);
    let t2 = w.1.min(l.ed.0.saturating_sub(1));
    (t1 <= t2 && l.ed.0 > 0).then_some((t1, t2))
}

enum Item<'a> {
    /// A node pattern; `chained` nodes must be the neighbour of the previous step.
    Node(&'a NodePattern),
    Step(&'a RelPattern, &'a NodePattern),
}

fn flatten(q: &MatchQuery) -> Vec<Item<'_>> {
    let mut out = Vec::new();
    for p in &q.clause.patterns {
        out.push(Item::Node(&p.start));
        for (r, n) in &p.steps {
            out.push(Item::Step(r, n));
        }
    }
    out
}

#[derive(Clone)]
struct Slot<'a> {
    var: Option<&'a str>,
    gid: Gid,
    v: &'a Version,
}

struct Ctx<'a> {
    o: &'a NaiveOracle,
    q: &'a MatchQuery,
    now: Timestamp,
    rows: Vec<Vec<Cell>>,
}

impl<'a> Ctx<'a> {
    fn lookup<'s>(slots: &'s [Slot<'a>], var: &Option<String>) -> Option<&'s Slot<'a>> {
        let var = var.as_deref()?;
        slots.iter().find(|s| s.var == Some(var))
    }

    fn search(
        &mut self,
        items: &[Item<'a>],
        i: usize,
        window: Option<(u64, u64)>,
        slots: &mut Vec<Slot<'a>>,
    ) -> Result<(), String> {
        if i == items.len() {
            return self.finish(slots);
        }
        match items[i] {
            Item::Node(np) => {
                for (gid, v) in self.node_candidates(np, window, slots)? {
                    let w = window.map(|w| narrow(w, v.lifespan).expect("candidate is legal"));
                    slots.push(Slot { var: np.var.as_deref(), gid, v });
                    self.search(items, i + 1, w, slots)?;
                    slots.pop();
                }
            }
            Item::Step(rp, np) => {
                let from = slots.iter().rev().find(|s| matches!(self.o.objects[&s.gid].kind, Kind::Vertex)).map(|s| s.gid);
                // The previous node is always the last vertex slot pushed.
                let from = from.expect("a step follows a node");
                let mut pairs = Vec::new();
                for &eg in self.o.incident.get(&from).into_iter().flatten() {
                    let Kind::Edge { src, dst } = self.o.objects[&eg].kind else { continue };
                    let mut ns = Vec::new();
                    match rp.direction {
                        RelDirection::Out if src == from => ns.push(dst),
                        RelDirection::In if dst == from => ns.push(src),
                        RelDirection::Both if src == from => ns.push(dst),
                        RelDirection::Both if dst == from => ns.push(src),
                        _ => {}
                    }
                    for n in ns {
                        pairs.push((eg, n));
                    }
                }
                for (eg, n) in pairs {
                    let bound_rel = Self::lookup(slots, &rp.var).map(|s| (s.gid, s.v.lifespan));
                    if bound_rel.is_some_and(|(g, _)| g != eg) {
                        continue;
                    }
                    let evs: Vec<&'a Version> = self.o.versions(eg, window).collect();
                    for ev in evs {
                        if bound_rel.is_some_and(|(_, l)| l != ev.lifespan) {
                            continue;
                        }
                        if let Some(t) = &rp.rel_type {
                            if !ev.labels.contains(t) {
                                continue;
                            }
                        }
                        if !self.props_ok(&rp.props, &ev.props, slots)? {
                            continue;
                        }
                        let we = window.map(|w| narrow(w, ev.lifespan).expect("legal"));
                        slots.push(Slot { var: rp.var.as_deref(), gid: eg, v: ev });
                        let nvs: Vec<&'a Version> = match Self::lookup(slots, &np.var) {
                            Some(b) if b.gid != n => Vec::new(),
                            Some(b) => {
                                let v = b.v;
                                let ok = match we {
                                    None => true,
                                    Some(w) => narrow(w, v.lifespan).is_some(),
                                };
                                if ok { vec![v] } else { Vec::new() }
                            }
                            None => self.o.versions(n, we).collect(),
                        };
                        for nv in nvs {
                            if !self.node_ok(np, nv, slots)? {
                                continue;
                            }
                            let wn = we.map(|w| narrow(w, nv.lifespan).expect("legal"));
                            slots.push(Slot { var: np.var.as_deref(), gid: n, v: nv });
                            self.search(items, i + 1, wn, slots)?;
                            slots.pop();
                        }
                        slots.pop();
                    }
                }
            }
        }
        Ok(())
    }

    fn node_candidates(
        &self,
        np: &NodePattern,
        window: Option<(u64, u64)>,
        slots: &[Slot<'a>],
    ) -> Result<Vec<(Gid, &'a Version)>, String> {
        if let Some(b) = Self::lookup(slots, &np.var) {
            return Ok(if self.node_ok(np, b.v, slots)? { vec![(b.gid, b.v)] } else { Vec::new() });
        }
        let mut out = Vec::new();
        for (&gid, obj) in &self.o.objects {
            if !matches!(obj.kind, Kind::Vertex) {
                continue;
            }
            for v in self.o.versions(gid, window) {
                if self.node_ok(np, v, slots)? {
                    out.push((gid, v));
                }
            }
        }
        Ok(out)
    }

    fn node_ok(&self, np: &NodePattern, v: &Version, slots: &[Slot<'a>]) -> Result<bool, String> {
        Ok(np.labels.iter().all(|l| v.labels.contains(l)) && self.props_ok(&np.props, &v.props, slots)?)
    }

    fn props_ok(&self, want: &BTreeMap<String, Expr>, have: &PropertyMap, slots: &[Slot<'a>]) -> Result<bool, String> {
        for (k, e) in want {
            let actual = Cell::Value(have.get(k).cloned().unwrap_or(Value::Null));
            let expected = self.eval(e, slots)?;
            if cmp3(CmpOp::Eq, &actual, &expected)? != Some(true) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn finish(&mut self, slots: &[Slot<'a>]) -> Result<(), String> {
        if let Some(w) = &self.q.clause.where_ {
            if truth(&self.eval(w, slots)?)? != Some(true) {
                return Ok(());
            }
        }
        let row = self
            .q
            .returns
            .iter()
            .map(|r| self.eval(&r.expr, slots))
            .collect::<Result<Vec<_>, _>>()?;
        self.rows.push(row);
        Ok(())
    }

    fn var<'s>(slots: &'s [Slot<'a>], name: &str) -> Result<&'s Slot<'a>, String> {
        slots.iter().find(|s| s.var == Some(name)).ok_or_else(|| format!("unbound {name}"))
    }

    fn eval(&self, e: &Expr, slots: &[Slot<'a>]) -> Result<Cell, String> {
        Ok(match e {
            Expr::Lit(v) => Cell::Value(v.clone()),
            Expr::Var(n) => {
                let s = Self::var(slots, n)?;
                self.o.cell(s.gid, s.v)
            }
            Expr::Prop(n, k) => {
                let s = Self::var(slots, n)?;
                let ts = |t: Timestamp| {
                    if t == Timestamp::INF || t == Timestamp::NEG_INF { Value::Null } else { Value::Int(t.0 as i64) }
                };
                Cell::Value(match k.as_str() {
                    PSEUDO_ST => ts(s.v.lifespan.st),
                    PSEUDO_ED => ts(s.v.lifespan.ed),
                    _ => s.v.props.get(k).cloned().unwrap_or(Value::Null),
                })
            }
            Expr::Call(f, args) => match (f.to_ascii_lowercase().as_str(), args.as_slice()) {
                ("now", []) => Cell::Value(Value::Int(self.now.0 as i64)),
                ("id", [a]) => match self.eval(a, slots)? {
                    Cell::Node(n) => Cell::Value(Value::Int(n.gid.0 as i64)),
                    Cell::Edge(r) => Cell::Value(Value::Int(r.gid.0 as i64)),
                    _ => return Err("id() of a non-object".into()),
                },
                ("type", [a]) => match self.eval(a, slots)? {
                    Cell::Edge(r) => Cell::Value(Value::Str(r.edge_type)),
                    _ => return Err("type() of a non-relationship".into()),
                },
                _ => return Err(format!("unsupported call {f}")),
            },
            Expr::Not(a) => b3(truth(&self.eval(a, slots)?)?.map(|b| !b)),
            Expr::And(a, b) => {
                let (l, r) = (truth(&self.eval(a, slots)?)?, truth(&self.eval(b, slots)?)?);
                b3(match (l, r) {
                    (Some(false), _) | (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                })
            }
            Expr::Or(a, b) => {
                let (l, r) = (truth(&self.eval(a, slots)?)?, truth(&self.eval(b, slots)?)?);
                b3(match (l, r) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                })
            }
            Expr::Cmp(op, a, b) => b3(cmp3(*op, &self.eval(a, slots)?, &self.eval(b, slots)?)?),
            Expr::IsNull(a, neg) => Cell::Value(Value::Bool((self.eval(a, slots)? == Cell::NULL) != *neg)),
            Expr::Arith(..) | Expr::Neg(_) => return Err("arithmetic is outside the oracle subset".into()),
        })
    }
}

fn b3(b: Option<bool>) -> Cell {
    Cell::Value(b.map_or(Value::Null, Value::Bool))
}

fn truth(c: &Cell) -> Result<Option<bool>, String> {
    match c {
        Cell::Value(Value::Null) => Ok(None),
        Cell::Value(Value::Bool(b)) => Ok(Some(*b)),
        _ => Err("non-boolean condition".into()),
    }
}

fn num(v: &Value) -> Option<f64> {
    match *v {
        Value::Int(i) => Some(i as f64),
        Value::Float(x) => Some(x),
        _ => None,
    }
}

fn cmp3(op: CmpOp, a: &Cell, b: &Cell) -> Result<Option<bool>, String> {
    if *a == Cell::NULL || *b == Cell::NULL {
        return Ok(None);
    }
    let ord = match (a, b) {
        (Cell::Value(Value::Int(x)), Cell::Value(Value::Int(y))) => Some(x.cmp(y)),
        (Cell::Value(x), Cell::Value(y)) if num(x).is_some() && num(y).is_some() => {
            num(x).unwrap().partial_cmp(&num(y).unwrap())
        }
        (Cell::Value(Value::Str(x)), Cell::Value(Value::Str(y))) => Some(x.cmp(y)),
        (Cell::Value(Value::Bool(x)), Cell::Value(Value::Bool(y))) => Some(x.cmp(y)),
        _ => None,
    };
    match (ord, op) {
        (Some(o), _) => Ok(Some(match op {
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::Ne => o != Ordering::Equal,
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Ge => o != Ordering::Less,
        })),
        (None, CmpOp::Eq) => Ok(Some(false)),
        (None, CmpOp::Ne) => Ok(Some(true)),
        (None, _) => Err("unordered comparison".into()),
    }
}
