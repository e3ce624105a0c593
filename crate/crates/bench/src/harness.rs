//! Latency benchmark over the four template queries.

use std::io::Write;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempograph::{Database, ReadCounters, Timestamp};

use crate::queries::{self, QuerySpec};
use crate::workload::{Record, WorkloadOp};

pub const CSV_HEADER: &str = "phase,query_id,p50_us,p95_us,mean_us,hist_bytes,anchors,deltas,chain_steps,deltas_applied";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub phase: String,
    pub query_id: String,
    pub p50_us: f64,
    pub p95_us: f64,
    pub mean_us: f64,
    pub hist_bytes: u64,
    pub anchors: u64,
    pub deltas: u64,
    /// Means per query.
    pub chain_steps: f64,
    pub deltas_applied: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.1},{:.1},{:.1},{},{},{},{:.2},{:.2}",
            self.phase,
            self.query_id,
            self.p50_us,
            self.p95_us,
            self.mean_us,
            self.hist_bytes,
            self.anchors,
            self.deltas,
            self.chain_steps,
            self.deltas_applied
        )
    }
}

pub fn write_csv(rows: &[BenchRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Queries per template.
    pub queries: usize,
    pub clients: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            queries: 200,
            clients: 1,
            seed: 1,
        }
    }
}

/// `id` values assigned by create records.
pub fn ids_of(records: &[Record]) -> Vec<i64> {
    let mut ids: Vec<i64> = records
        .iter()
        .filter_map(|r| match &r.op {
            WorkloadOp::CreateVertex { props, .. } => props.get("id").and_then(serde_json::Value::as_i64),
            _ => None,
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Random instances of Q1 to Q4 over `ids` and timestamps up to `last`.
pub fn template_queries(ids: &[i64], last: Timestamp, n: usize, seed: u64) -> Vec<QuerySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(4 * n);
    let hi = last.0.max(1);
    for _ in 0..n {
        let id = |rng: &mut ChaCha8Rng| if ids.is_empty() { 0 } else { ids[rng.random_range(0..ids.len())] };
        let t = Timestamp(rng.random_range(1..=hi));
        out.push(queries::q1(id(&mut rng), t));
        let (a, b) = queries::slice(&mut rng, 1, hi);
        out.push(queries::q2(id(&mut rng), a, b));
        out.push(queries::q3(id(&mut rng), t));
        out.push(queries::q4(id(&mut rng), a, b));
    }
    out
}

/// Runs `specs` across `clients` threads and summarises latency and work
/// per template.
pub fn run(db: &Arc<Database>, phase: &str, specs: &[QuerySpec], clients: usize) -> anyhow::Result<Vec<BenchRow>> {
    let clients = clients.max(1);
    let chunks: Vec<Vec<QuerySpec>> = (0..clients)
        .map(|c| specs.iter().skip(c).step_by(clients).cloned().collect())
        .collect();
    let results = thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                let db = db.clone();
                s.spawn(move || -> tempograph::Result<Vec<(String, f64, ReadCounters)>> {
                    let mut out = Vec::with_capacity(chunk.len());
                    for q in chunk {
                        let t = Instant::now();
                        let r = db.query(&q.text)?;
                        out.push((q.id, t.elapsed().as_secs_f64() * 1e6, r.counters));
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench client panicked"))
            .collect::<Vec<_>>()
    });
    let mut samples = Vec::new();
    for r in results {
        samples.extend(r?);
    }
    let stats = db.hist().stats();
    let mut ids: Vec<String> = samples.iter().map(|s| s.0.clone()).collect();
    ids.sort();
    ids.dedup();
    Ok(ids
        .into_iter()
        .map(|id| {
            let mine: Vec<&(String, f64, ReadCounters)> = samples.iter().filter(|s| s.0 == id).collect();
            let mut lat: Vec<f64> = mine.iter().map(|s| s.1).collect();
            lat.sort_by(f64::total_cmp);
            let n = mine.len() as f64;
            BenchRow {
                phase: phase.to_string(),
                query_id: id,
                p50_us: percentile(&lat, 0.50),
                p95_us: percentile(&lat, 0.95),
                mean_us: lat.iter().sum::<f64>() / n,
                hist_bytes: stats.bytes,
                anchors: stats.anchors,
                deltas: stats.deltas,
                chain_steps: mine.iter().map(|s| s.2.chain_steps as f64).sum::<f64>() / n,
                deltas_applied: mine.iter().map(|s| s.2.deltas_applied as f64).sum::<f64>() / n,
            }
        })
        .collect())
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Counters summed over `specs`, run sequentially.
pub fn total_counters(db: &Database, specs: &[QuerySpec]) -> tempograph::Result<ReadCounters> {
    let mut c = ReadCounters::default();
    for q in specs {
        c += db.query(&q.text)?.counters;
    }
    Ok(c)
}
