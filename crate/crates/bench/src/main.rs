use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tempograph::{AnchorPolicy, Database, DbConfig, GcMode};
use tempograph_bench::check::{self, GcState};
use tempograph_bench::harness::{self, BenchConfig};
use tempograph_bench::repl::{format_result, Repl};
use tempograph_bench::workload::{self, GenConfig, WorkloadError};

#[derive(Parser)]
#[command(name = "tempograph", version, about = "Temporal property graph shell and benchmark driver")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct Global {
    /// Directory for persistent storage; in-memory when omitted.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1000)]
    tau1: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    tau2: u64,
    #[arg(long, global = true, default_value_t = 0.01)]
    c: f64,
    /// `adaptive` or `fixed:<u>`.
    #[arg(long, global = true, default_value = "adaptive")]
    anchor: String,
    /// Collector period; `0` collects after every commit, `off` disables it.
    #[arg(long, global = true, default_value = "100")]
    gc_interval_ms: String,
    /// Purge history that ended longer ago than this.
    #[arg(long, global = true)]
    retention_ms: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Skew of update targets in generated workloads.
    #[arg(long, global = true, default_value_t = 1.1)]
    zipf: f64,
    /// Tab-separated output.
    #[arg(long, global = true)]
    tsv: bool,
    /// Concurrent query threads for `bench`.
    #[arg(long, global = true, default_value_t = 1)]
    clients: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive shell (the default).
    Repl,
    /// Runs statements: one per line from a file, or a single one with -e.
    Query {
        file: Option<PathBuf>,
        #[arg(short = 'e', long = "execute")]
        execute: Option<String>,
    },
    /// Applies a line-delimited JSON workload.
    Load { file: PathBuf },
    /// Writes a generated workload.
    Generate {
        #[arg(long, default_value_t = 1000)]
        ops: usize,
        #[arg(long, default_value_t = 100)]
        vertices: usize,
        #[arg(long, default_value_t = 200)]
        edges: usize,
        /// Percent updates/creates/deletes.
        #[arg(long, default_value = "80/10/10")]
        mix: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loads a workload, then times Q1 to Q4 before and after collection.
    Bench {
        /// Workload file; generated from --seed when omitted.
        #[arg(long)]
        workload: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        ops: usize,
        /// Instances per query template.
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compares the engine with the reference oracle on generated workloads.
    Check {
        #[arg(long, default_value_t = 5)]
        workloads: u64,
        #[arg(long, default_value_t = 1000)]
        ops: usize,
        #[arg(long, default_value_t = 100)]
        slices: usize,
    },
}

impl Global {
    fn policy(&self) -> Result<AnchorPolicy> {
        Ok(AnchorPolicy::parse(&self.anchor, self.tau1, self.tau2, self.c)?)
    }

    fn gc_mode(&self) -> Result<GcMode> {
        Ok(match self.gc_interval_ms.as_str() {
            "off" => GcMode::Off,
            "0" => GcMode::EveryCommit,
            s => {
                let ms: u64 = s.parse().with_context(|| format!("bad --gc-interval-ms {s:?}"))?;
                GcMode::Interval(Duration::from_millis(ms))
            }
        })
    }

    fn config(&self) -> Result<DbConfig> {
        Ok(DbConfig {
            policy: self.policy()?,
            gc: self.gc_mode()?,
            retention_ms: self.retention_ms,
            sync: false,
        })
    }

    fn open(&self) -> Result<Arc<Database>> {
        let config = self.config()?;
        Ok(match &self.store {
            Some(dir) => Database::open(dir, config)?,
            None => Database::in_memory(config)?,
        })
    }

    fn gen_config(&self, ops: usize) -> GenConfig {
        GenConfig {
            seed: self.seed,
            ops,
            zipf: self.zipf,
            ..Default::default()
        }
    }
}

fn parse_mix(s: &str) -> Result<(u32, u32, u32)> {
    let parts: Vec<u32> = s
        .split('/')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad --mix {s:?}"))?;
    match parts[..] {
        [u, c, d] if u + c + d == 100 => Ok((u, c, d)),
        _ => bail!("--mix must be three percentages summing to 100, got {s:?}"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    match cli.command.unwrap_or(Command::Repl) {
        Command::Repl => {
            let db = g.open()?;
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            Repl { db: &db, tsv: g.tsv }.run(stdin.lock(), io::stdout().lock(), prompt)?;
        }
        Command::Query { file, execute } => {
            let db = g.open()?;
            let text = match (file, execute) {
                (_, Some(q)) => q,
                (Some(f), None) => fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?,
                (None, None) => {
                    let mut s = String::new();
                    for l in io::stdin().lock().lines() {
                        s.push_str(&l?);
                        s.push('\n');
                    }
                    s
                }
            };
            let mut out = io::stdout().lock();
            for (i, line) in text.lines().enumerate() {
                let q = line.trim();
                if q.is_empty() || q.starts_with('#') {
                    continue;
                }
                let r = db.query(q).with_context(|| format!("line {}", i + 1))?;
                write!(out, "{}", format_result(&r, g.tsv))?;
            }
        }
        Command::Load { file } => {
            let db = g.open()?;
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let lines = workload::parse(&text)?;
            let applied = workload::apply(&db, &lines, None, |_, _| {})?;
            println!(
                "applied {} ops in {} transactions; {} objects created",
                applied.ops, applied.groups, applied.objects_created
            );
        }
        Command::Generate { ops, vertices, edges, mix, out } => {
            let cfg = GenConfig {
                base_vertices: vertices,
                base_edges: edges,
                mix: parse_mix(&mix)?,
                ..g.gen_config(ops)
            };
            let text = workload::to_text(&workload::generate(&cfg));
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => io::stdout().lock().write_all(text.as_bytes())?,
            }
        }
        Command::Bench { workload: file, ops, queries, out } => {
            // Collection is driven explicitly so both phases are well defined.
            let db = Database::in_memory(DbConfig {
                gc: GcMode::Off,
                ..g.config()?
            })?;
            let records = match file {
                Some(f) => {
                    let text = fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
                    workload::parse(&text)?.into_iter().map(|l| l.record).collect()
                }
                None => workload::generate(&g.gen_config(ops)),
            };
            let ids = harness::ids_of(&records);
            workload::apply(&db, &workload::lines(records), None, |_, _| {})?;
            let cfg = BenchConfig {
                queries,
                clients: g.clients,
                seed: g.seed,
            };
            let specs = harness::template_queries(&ids, db.now(), cfg.queries, cfg.seed);
            let mut rows = harness::run(&db, "chains", &specs, cfg.clients)?;
            let report = db.gc()?;
            eprintln!("migrated {} versions", report.versions_migrated);
            rows.extend(harness::run(&db, "historical", &specs, cfg.clients)?);
            match out {
                Some(p) => harness::write_csv(&rows, fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?)?,
                None => harness::write_csv(&rows, io::stdout().lock())?,
            }
        }
        Command::Check { workloads, ops, slices } => {
            let policy = g.policy()?;
            for seed in g.seed..g.seed + workloads {
                let cfg = GenConfig { seed, ops, zipf: g.zipf, ..Default::default() };
                for gc in GcState::ALL {
                    let (db, oracle) = check::load(&cfg, policy, gc, g.retention_ms)?;
                    let suite = check::equivalence_suite(&oracle, seed, slices);
                    match check::oracle_check(&db, &oracle, &suite) {
                        Ok(r) => println!("seed {seed} {gc:?}: {} queries, {} rows agree", r.queries, r.rows),
                        Err(d) => {
                            eprint!("{d}");
                            bail!("oracle divergence at seed {seed} {gc:?}");
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Short machine-readable class for an error chain.
fn code(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(t) = cause.downcast_ref::<tempograph::Error>() {
            return t.code();
        }
        if let Some(w) = cause.downcast_ref::<WorkloadError>() {
            return w.code();
        }
        if let Some(h) = cause.downcast_ref::<tempograph::hist::HistError>() {
            return match h {
                tempograph::hist::HistError::InvalidPolicy(_) => "invalid_policy",
                _ => "historical_store",
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return "io_error";
        }
    }
    "invalid_argument"
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {}: {msg}", code(&e));
            ExitCode::FAILURE
        }
    }
}
