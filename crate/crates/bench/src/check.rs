//! Runs queries against the engine and the oracle and reports the first
//! disagreement.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempograph::cypher::parse;
use tempograph::{AnchorPolicy, Cell, Database, DbConfig, GcMode, ReadCounters};

use crate::oracle::NaiveOracle;
use crate::queries::{self, QuerySpec};
use crate::workload::{self, GenConfig, WorkloadError};

#[derive(Debug, Clone)]
pub struct Divergence {
    pub query: String,
    pub expected: Result<Vec<Vec<Cell>>, String>,
    pub actual: Result<Vec<Vec<Cell>>, String>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "divergence on: {}", self.query)?;
        let show = |f: &mut fmt::Formatter<'_>, label: &str, r: &Result<Vec<Vec<Cell>>, String>| match r {
            Err(e) => writeln!(f, "  {label}: error {e}"),
            Ok(rows) => {
                writeln!(f, "  {label}: {} rows", rows.len())?;
                for row in rows.iter().take(8) {
                    let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                    writeln!(f, "    {}", cells.join(" | "))?;
                }
                Ok(())
            }
        };
        show(f, "oracle", &self.expected)?;
        show(f, "engine", &self.actual)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub queries: usize,
    pub rows: usize,
    pub counters: ReadCounters,
}

/// Runs one query both ways. Errors on both sides count as agreement.
pub fn check_one(db: &Database, oracle: &NaiveOracle, q: &QuerySpec, report: &mut CheckReport) -> Result<(), Box<Divergence>> {
    let now = db.now();
    let expected = parse(&q.text)
        .map_err(|e| e.to_string())
        .and_then(|s| oracle.evaluate(&s, now));
    let actual = db.query(&q.text).map_err(|e| e.to_string()).map(|r| {
        report.counters += r.counters;
        let mut rows = r.rows;
        rows.sort();
        rows
    });
    report.queries += 1;
    let same = match (&expected, &actual) {
        (Ok(a), Ok(b)) => a == b,
        (Err(_), Err(_)) => true,
        _ => false,
    };
    if let Ok(rows) = &actual {
        report.rows += rows.len();
    }
    if same {
        Ok(())
    } else {
        Err(Box::new(Divergence {
            query: q.text.clone(),
            expected,
            actual,
        }))
    }
}

pub fn oracle_check(db: &Database, oracle: &NaiveOracle, queries: &[QuerySpec]) -> Result<CheckReport, Box<Divergence>> {
    let mut report = CheckReport::default();
    for q in queries {
        check_one(db, oracle, q, &mut report)?;
    }
    Ok(report)
}

/// Collection schedule while a workload loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcState {
    /// Nothing migrates; all history stays in undo chains.
    Never,
    /// One forced collection halfway through the load.
    MidRun,
    /// Synchronous collection after every commit.
    EveryCommit,
}

impl GcState {
    pub const ALL: [GcState; 3] = [GcState::Never, GcState::MidRun, GcState::EveryCommit];
}

/// Loads a generated workload into a fresh in-memory database, mirroring it
/// into an oracle.
pub fn load(
    cfg: &GenConfig,
    policy: AnchorPolicy,
    gc: GcState,
    retention_ms: Option<u64>,
) -> Result<(Arc<Database>, NaiveOracle), WorkloadError> {
    let db = Database::in_memory(DbConfig {
        policy,
        gc: if gc == GcState::EveryCommit { GcMode::EveryCommit } else { GcMode::Off },
        retention_ms,
        sync: false,
    })
    .map_err(|source| WorkloadError::Constraint { line: 0, source })?;
    let lines = workload::lines(workload::generate(cfg));
    let half = lines.len() / 2;
    let mut forced = false;
    let mut oracle = NaiveOracle::new();
    let mut gc_err = None;
    workload::apply(&db, &lines, Some(&mut oracle), |db, done| {
        if gc == GcState::MidRun && !forced && done >= half {
            forced = true;
            if let Err(e) = db.gc() {
                gc_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(source) = gc_err {
        return Err(WorkloadError::Constraint { line: 0, source });
    }
    oracle.set_horizon(db.hist().purge_horizon());
    Ok((db, oracle))
}

/// Q1 and Q3 at every commit and Q2 and Q4 over `slices` random windows.
/// Whole-graph scans, which return thousands of rows, are sampled: one
/// every 50 commits and one per 10 slices.
pub fn equivalence_suite(oracle: &NaiveOracle, seed: u64, slices: usize) -> Vec<QuerySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = oracle.vertex_ids();
    let commits = oracle.commits();
    let Some(&last) = commits.last() else { return Vec::new() };
    // Skewed towards low ids, which the generator updates most.
    let pick = |rng: &mut ChaCha8Rng| {
        if ids.is_empty() {
            return 0;
        }
        let cap = rng.random_range(1..=ids.len());
        ids[rng.random_range(0..cap)]
    };
    let mut out = Vec::new();
    for (i, &t) in commits.iter().enumerate() {
        out.push(queries::q1(pick(&mut rng), t));
        out.push(queries::q3(pick(&mut rng), t));
        if i % 50 == 0 {
            out.push(QuerySpec {
                id: "graph_point".into(),
                text: format!("MATCH (a)-[e]->(b) FOR TT AS OF {} RETURN a, e, b", t.0),
            });
            out.push(QuerySpec {
                id: "vertices_point".into(),
                text: format!("MATCH (n) FOR TT AS OF {} RETURN n", t.0),
            });
        }
    }
    for i in 0..slices {
        let (t1, t2) = queries::slice(&mut rng, 0, last.0 + 2);
        out.push(queries::q2(pick(&mut rng), t1, t2));
        out.push(queries::q4(pick(&mut rng), t1, t2));
        if i % 10 != 0 {
            continue;
        }
        out.push(QuerySpec {
            id: "graph_slice".into(),
            text: format!("MATCH (a)-[e]-(b) FOR TT FROM {} TO {} RETURN a, e, b", t1.0, t2.0),
        });
    }
    out
}
