//! Interactive shell and result formatting.

use std::io::{BufRead, Write};

use tempograph::{Database, QueryResult};

pub const HELP: &str = "\
Statements end at the line break. Meta commands:
  :stats   historical store and collector totals
  :gc      run one collection pass
  :help    this text
  :quit    leave the shell";

/// Renders a result as an aligned table or as TSV.
pub fn format_result(r: &QueryResult, tsv: bool) -> String {
    let mut out = String::new();
    if r.columns.is_empty() {
        let s = &r.stats;
        out.push_str(&format!(
            "nodes created: {}, edges created: {}, properties set: {}, nodes deleted: {}, edges deleted: {}\n",
            s.nodes_created, s.edges_created, s.properties_set, s.nodes_deleted, s.edges_deleted
        ));
        return out;
    }
    let cells: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| row.iter().map(|c| c.to_string()).collect())
        .collect();
    if tsv {
        out.push_str(&r.columns.join("\t"));
        out.push('\n');
        for row in &cells {
            let escaped: Vec<String> = row.iter().map(|c| c.replace(['\t', '\n'], " ")).collect();
            out.push_str(&escaped.join("\t"));
            out.push('\n');
        }
        return out;
    }
    let mut widths: Vec<usize> = r.columns.iter().map(|c| c.chars().count()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |vals: &[String]| {
        let padded: Vec<String> = vals.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        padded.join(" | ").trim_end().to_string() + "\n"
    };
    out.push_str(&line(&r.columns));
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row));
    }
    out.push_str(&format!("({} row{})\n", cells.len(), if cells.len() == 1 { "" } else { "s" }));
    out
}

pub fn stats_text(db: &Database) -> String {
    let h = db.hist().stats();
    let g = db.gc_totals();
    format!(
        "vertices: {}\nedges: {}\nhist_entries: {}\nanchors: {}\ndeltas: {}\nhist_bytes: {}\nunreclaimed_records: {}\ngc_runs: {}\nversions_migrated: {}\npurge_horizon: {}\n",
        db.current().vertex_count(),
        db.current().edge_count(),
        h.entries(),
        h.anchors,
        h.deltas,
        h.bytes,
        db.unreclaimed_records(),
        g.runs,
        g.report.versions_migrated,
        db.hist().purge_horizon(),
    )
}

pub enum Control {
    Continue,
    Quit,
}

pub struct Repl<'a> {
    pub db: &'a Database,
    pub tsv: bool,
}

impl Repl<'_> {
    /// Handles one input line. Query errors are reported, not returned.
    pub fn handle(&mut self, line: &str, out: &mut impl Write) -> std::io::Result<Control> {
        let line = line.trim();
        match line {
            "" => {}
            l if l.starts_with('#') || l.starts_with("//") => {}
            ":quit" | ":q" | ":exit" => return Ok(Control::Quit),
            ":help" => writeln!(out, "{HELP}")?,
            ":stats" => write!(out, "{}", stats_text(self.db))?,
            ":gc" => match self.db.gc() {
                Ok(r) => writeln!(out, "migrated {} versions", r.versions_migrated)?,
                Err(e) => writeln!(out, "error: {}: {e}", e.code())?,
            },
            l if l.starts_with(':') => writeln!(out, "error: unknown_command: {l} (try :help)")?,
            q => match self.db.query(q) {
                Ok(r) => write!(out, "{}", format_result(&r, self.tsv))?,
                Err(tempograph::Error::Parse(e)) => {
                    writeln!(out, "error: parse_error: {e}")?;
                    writeln!(out, "{}", e.caret(q))?;
                }
                Err(e) => writeln!(out, "error: {}: {e}", e.code())?,
            },
        }
        Ok(Control::Continue)
    }

    pub fn run(&mut self, input: impl BufRead, mut out: impl Write, prompt: bool) -> std::io::Result<()> {
        if prompt {
            write!(out, "tempograph> ")?;
            out.flush()?;
        }
        for line in input.lines() {
            if let Control::Quit = self.handle(&line?, &mut out)? {
                break;
            }
            if prompt {
                write!(out, "tempograph> ")?;
                out.flush()?;
            }
        }
        Ok(())
    }
}
