//! Line-delimited workload files: one JSON record per line, consecutive
//! records sharing a `txn_group` run in one transaction.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use tempograph::model::{LabelSet, PropertyMap};
use tempograph::{Database, Gid, Timestamp, Value};

use crate::oracle::{NaiveOracle, ResolvedOp};

pub type JsonProps = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WorkloadOp {
    CreateVertex {
        name: String,
        #[serde(default)]
        labels: Vec<String>,
        #[serde(default)]
        props: JsonProps,
    },
    CreateEdge {
        name: String,
        src: String,
        dst: String,
        #[serde(rename = "type")]
        edge_type: String,
        #[serde(default)]
        props: JsonProps,
    },
    UpdateProps {
        target: String,
        changes: JsonProps,
    },
    DeleteVertex {
        target: String,
    },
    DeleteEdge {
        target: String,
    },
}

impl WorkloadOp {
    pub fn kind(&self) -> OpKind {
        match self {
            WorkloadOp::CreateVertex { .. } | WorkloadOp::CreateEdge { .. } => OpKind::Create,
            WorkloadOp::UpdateProps { .. } => OpKind::Update,
            WorkloadOp::DeleteVertex { .. } | WorkloadOp::DeleteEdge { .. } => OpKind::Delete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Create,
    Update,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub txn_group: u64,
    #[serde(flatten)]
    pub op: WorkloadOp,
}

/// A record and the 1-based line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub line: usize,
    pub record: Record,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: undefined symbol {name:?}")]
    UndefinedSymbol { line: usize, name: String },
    #[error("line {line}: symbol {name:?} is already bound")]
    DuplicateSymbol { line: usize, name: String },
    #[error("line {line}: {source}")]
    Constraint {
        line: usize,
        #[source]
        source: tempograph::Error,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl WorkloadError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkloadError::Parse { .. } => "workload_parse",
            WorkloadError::UndefinedSymbol { .. } => "undefined_symbol",
            WorkloadError::DuplicateSymbol { .. } => "duplicate_symbol",
            WorkloadError::Constraint { source, .. } => source.code(),
            WorkloadError::Io(_) => "io_error",
        }
    }
}

/// Parses workload text. Blank lines and lines starting with `#` are skipped.
pub fn parse(text: &str) -> Result<Vec<Line>, WorkloadError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let record: Record = serde_json::from_str(t).map_err(|e| WorkloadError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(Line { line: i + 1, record });
    }
    Ok(out)
}

pub fn to_text(records: &[Record]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

/// Numbers without a fraction or exponent become ints.
pub fn json_to_value(v: &serde_json::Value) -> Result<Value, String> {
    Ok(match v {
        serde_json::Value::Null => Value::Null,
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(n.as_f64().ok_or_else(|| format!("number {n} out of range"))?),
        },
        serde_json::Value::String(s) => Value::Str(s.clone()),
        other => return Err(format!("unsupported property value {other}")),
    })
}

pub fn value_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Null => serde_json::Value::Null,
        Value::Bool(b) => (*b).into(),
        Value::Int(i) => (*i).into(),
        Value::Float(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
        Value::Str(s) => s.clone().into(),
    }
}

fn props(line: usize, p: &JsonProps) -> Result<PropertyMap, WorkloadError> {
    p.iter()
        .map(|(k, v)| {
            json_to_value(v)
                .map(|v| (k.clone(), v))
                .map_err(|message| WorkloadError::Parse { line, message })
        })
        .collect()
}

/// Outcome of [`apply`].
#[derive(Debug, Clone, Default)]
pub struct Applied {
    pub ops: usize,
    pub groups: usize,
    pub objects_created: usize,
    /// Commit timestamp of every group, in order.
    pub commits: Vec<Timestamp>,
    /// Symbol bindings after the run.
    pub symbols: HashMap<String, Gid>,
}

/// Applies records group by group. `after_commit` runs after each group
/// with the number of ops applied so far.
pub fn apply(
    db: &Database,
    lines: &[Line],
    mut oracle: Option<&mut NaiveOracle>,
    mut after_commit: impl FnMut(&Database, usize),
) -> Result<Applied, WorkloadError> {
    let mut out = Applied::default();
    let mut i = 0;
    while i < lines.len() {
        let group = lines[i].record.txn_group;
        let end = lines[i..]
            .iter()
            .position(|l| l.record.txn_group != group)
            .map_or(lines.len(), |n| i + n);
        let mut txn = db.begin();
        let mut resolved = Vec::with_capacity(end - i);
        let mut bound = Vec::new();
        for l in &lines[i..end] {
            let line = l.line;
            let lookup = |name: &str, symbols: &HashMap<String, Gid>| {
                symbols.get(name).copied().ok_or_else(|| WorkloadError::UndefinedSymbol {
                    line,
                    name: name.to_string(),
                })
            };
            let constraint = |source| WorkloadError::Constraint { line, source };
            let op = match &l.record.op {
                WorkloadOp::CreateVertex { name, labels, props: p } => {
                    if out.symbols.contains_key(name) {
                        return Err(WorkloadError::DuplicateSymbol { line, name: name.clone() });
                    }
                    let labels: LabelSet = labels.iter().cloned().collect();
                    let p = props(line, p)?;
                    let gid = txn.create_vertex(labels.clone(), p.clone()).map_err(constraint)?;
                    out.symbols.insert(name.clone(), gid);
                    bound.push(name.clone());
                    ResolvedOp::CreateVertex { gid, labels, props: p }
                }
                WorkloadOp::CreateEdge { name, src, dst, edge_type, props: p } => {
                    if out.symbols.contains_key(name) {
                        return Err(WorkloadError::DuplicateSymbol { line, name: name.clone() });
                    }
                    let (s, d) = (lookup(src, &out.symbols)?, lookup(dst, &out.symbols)?);
                    let p = props(line, p)?;
                    let gid = txn.create_edge(s, d, edge_type, p.clone()).map_err(constraint)?;
                    out.symbols.insert(name.clone(), gid);
                    bound.push(name.clone());
                    ResolvedOp::CreateEdge {
                        gid,
                        src: s,
                        dst: d,
                        edge_type: edge_type.clone(),
                        props: p,
                    }
                }
                WorkloadOp::UpdateProps { target, changes } => {
                    let gid = lookup(target, &out.symbols)?;
                    let changes = props(line, changes)?;
                    txn.set_properties(gid, changes.clone()).map_err(constraint)?;
                    ResolvedOp::Update { gid, changes }
                }
                WorkloadOp::DeleteVertex { target } => {
                    let gid = lookup(target, &out.symbols)?;
                    txn.delete_vertex(gid).map_err(constraint)?;
                    ResolvedOp::DeleteVertex { gid }
                }
                WorkloadOp::DeleteEdge { target } => {
                    let gid = lookup(target, &out.symbols)?;
                    txn.delete_edge(gid).map_err(constraint)?;
                    ResolvedOp::DeleteEdge { gid }
                }
            };
            resolved.push(op);
        }
        let ts = txn.commit().map_err(|source| WorkloadError::Constraint {
            line: lines[end - 1].line,
            source,
        });
        let ts = match ts {
            Ok(ts) => ts,
            Err(e) => {
                for name in bound {
                    out.symbols.remove(&name);
                }
                return Err(e);
            }
        };
        if let Some(o) = oracle.as_deref_mut() {
            o.apply_group(ts, &resolved);
        }
        out.objects_created += bound.len();
        out.ops += end - i;
        out.groups += 1;
        out.commits.push(ts);
        after_commit(db, out.ops);
        i = end;
    }
    Ok(out)
}

/// Parameters of a generated workload.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    /// Vertices and edges created before the mixed phase.
    pub base_vertices: usize,
    pub base_edges: usize,
    /// Size of the mixed phase.
    pub ops: usize,
    /// Percentages of updates, creates and deletes; they must sum to 100.
    pub mix: (u32, u32, u32),
    pub zipf: f64,
    /// Chance that an op joins the previous op's transaction.
    pub group_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 1,
            base_vertices: 100,
            base_edges: 200,
            ops: 1000,
            mix: (80, 10, 10),
            zipf: 1.1,
            group_prob: 0.1,
        }
    }
}

impl GenConfig {
    /// Exact op counts of the mixed phase: (updates, creates, deletes).
    pub fn quotas(&self) -> (usize, usize, usize) {
        let (u, c, _) = self.mix;
        let updates = self.ops * u as usize / 100;
        let creates = self.ops * c as usize / 100;
        (updates, creates, self.ops - updates - creates)
    }
}

pub const EDGE_TYPES: [&str; 2] = ["KNOWS", "FOLLOWS"];
const NAMES: [&str; 6] = ["ann", "bob", "cy", "dee", "eve", "fay"];

struct GenState {
    rng: ChaCha8Rng,
    zipf: f64,
    /// Live vertices and edges in creation order; index 0 is the hottest.
    vertices: Vec<String>,
    edges: Vec<String>,
    /// Edge endpoints, for cascading vertex deletes.
    endpoints: HashMap<String, (String, String)>,
    next_vertex: usize,
    next_edge: usize,
    group: u64,
    out: Vec<Record>,
}

impl GenState {
    fn push(&mut self, op: WorkloadOp, join_prob: f64) {
        if self.out.is_empty() || !self.rng.random_bool(join_prob) {
            self.group += 1;
        }
        self.out.push(Record {
            txn_group: self.group,
            op,
        });
    }

    fn zipf_index(&mut self, n: usize) -> usize {
        let z = Zipf::new(n as f64, self.zipf).expect("valid zipf parameters");
        (z.sample(&mut self.rng) as usize).clamp(1, n) - 1
    }

    fn vertex_props(&mut self, id: usize) -> JsonProps {
        let mut p = JsonProps::new();
        p.insert("id".into(), (id as i64).into());
        p.insert("age".into(), self.rng.random_range(18..80i64).into());
        p.insert("name".into(), NAMES[self.rng.random_range(0..NAMES.len())].into());
        let score = (self.rng.random_range(0..1000) as f64) / 1000.0;
        p.insert("score".into(), value_to_json(&Value::Float(score)));
        p
    }

    fn create_vertex(&mut self, join: f64) {
        let id = self.next_vertex;
        self.next_vertex += 1;
        let mut labels = vec!["User".to_string()];
        if self.rng.random_bool(0.3) {
            labels.push("Admin".into());
        }
        let name = format!("v{id}");
        let props = self.vertex_props(id);
        self.vertices.push(name.clone());
        self.push(WorkloadOp::CreateVertex { name, labels, props }, join);
    }

    fn create_edge(&mut self, join: f64) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let i = self.zipf_index(self.vertices.len());
        let src = self.vertices[i].clone();
        let dst = self.vertices[self.rng.random_range(0..self.vertices.len())].clone();
        let name = format!("e{}", self.next_edge);
        self.next_edge += 1;
        let mut props = JsonProps::new();
        props.insert("w".into(), self.rng.random_range(0..10i64).into());
        let edge_type = EDGE_TYPES[self.rng.random_range(0..EDGE_TYPES.len())].to_string();
        self.edges.push(name.clone());
        self.endpoints.insert(name.clone(), (src.clone(), dst.clone()));
        self.push(WorkloadOp::CreateEdge { name, src, dst, edge_type, props }, join);
        true
    }

    fn update(&mut self, join: f64) -> bool {
        let on_edge = !self.edges.is_empty() && self.rng.random_bool(0.25);
        let mut changes = JsonProps::new();
        let target = if on_edge {
            changes.insert("w".into(), self.rng.random_range(0..10i64).into());
            let i = self.zipf_index(self.edges.len());
            self.edges[i].clone()
        } else {
            if self.vertices.is_empty() {
                return false;
            }
            let n = self.rng.random_range(1..=2);
            for _ in 0..n {
                match self.rng.random_range(0..4) {
                    0 => changes.insert("age".into(), self.rng.random_range(18..80i64).into()),
                    1 => {
                        let s = (self.rng.random_range(0..1000) as f64) / 1000.0;
                        changes.insert("score".into(), value_to_json(&Value::Float(s)))
                    }
                    2 => changes.insert("name".into(), NAMES[self.rng.random_range(0..NAMES.len())].into()),
                    _ => {
                        let status = if self.rng.random_bool(0.5) {
                            serde_json::Value::Null
                        } else {
                            "active".into()
                        };
                        changes.insert("status".into(), status)
                    }
                };
            }
            let i = self.zipf_index(self.vertices.len());
            self.vertices[i].clone()
        };
        self.push(WorkloadOp::UpdateProps { target, changes }, join);
        true
    }

    /// Deletes always open a new group so they never hit an object created
    /// in the same transaction.
    fn delete(&mut self) -> bool {
        let join = 0.0;
        let on_edge = !self.edges.is_empty() && (self.vertices.is_empty() || self.rng.random_bool(0.5));
        if on_edge {
            let i = self.rng.random_range(0..self.edges.len());
            let target = self.edges.remove(i);
            self.endpoints.remove(&target);
            self.push(WorkloadOp::DeleteEdge { target }, join);
            return true;
        }
        if self.vertices.is_empty() {
            return false;
        }
        let i = self.rng.random_range(0..self.vertices.len());
        let target = self.vertices.remove(i);
        let gone: Vec<String> = self
            .endpoints
            .iter()
            .filter(|(_, (s, d))| *s == target || *d == target)
            .map(|(e, _)| e.clone())
            .collect();
        for e in &gone {
            self.endpoints.remove(e);
        }
        self.edges.retain(|e| !gone.contains(e));
        self.push(WorkloadOp::DeleteVertex { target }, join);
        true
    }
}

/// Deterministic op stream: a base graph, then a shuffled mix with
/// Zipf-skewed update targets.
pub fn generate(cfg: &GenConfig) -> Vec<Record> {
    assert_eq!(cfg.mix.0 + cfg.mix.1 + cfg.mix.2, 100, "mix must sum to 100");
    let mut g = GenState {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        zipf: cfg.zipf,
        vertices: Vec::new(),
        edges: Vec::new(),
        endpoints: HashMap::new(),
        next_vertex: 0,
        next_edge: 0,
        group: 0,
        out: Vec::new(),
    };
    for _ in 0..cfg.base_vertices {
        g.create_vertex(0.0);
    }
    for _ in 0..cfg.base_edges {
        g.create_edge(0.0);
    }
    let (updates, creates, deletes) = cfg.quotas();
    let mut kinds: Vec<OpKind> = std::iter::repeat_n(OpKind::Update, updates)
        .chain(std::iter::repeat_n(OpKind::Create, creates))
        .chain(std::iter::repeat_n(OpKind::Delete, deletes))
        .collect();
    kinds.shuffle(&mut g.rng);
    for k in kinds {
        let join = cfg.group_prob;
        let done = match k {
            OpKind::Update => g.update(join),
            OpKind::Create => {
                if g.vertices.len() < 2 || g.rng.random_bool(0.5) {
                    g.create_vertex(join);
                    true
                } else {
                    g.create_edge(join)
                }
            }
            OpKind::Delete => g.delete(),
        };
        // With nothing left to touch, grow the graph instead.
        if !done {
            g.create_vertex(join);
        }
    }
    g.out
}

/// Assigns line numbers to in-memory records.
pub fn lines(records: Vec<Record>) -> Vec<Line> {
    records
        .into_iter()
        .enumerate()
        .map(|(i, record)| Line { line: i + 1, record })
        .collect()
}
