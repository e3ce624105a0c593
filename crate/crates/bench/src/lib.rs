//! Workloads, a reference oracle, the benchmark harness and the shell.

pub mod check;
pub mod oracle;
pub mod queries;
pub mod workload;
pub mod harness;
pub mod repl;
