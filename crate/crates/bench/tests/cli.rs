use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tempograph"))
}

fn run(args: &[&str], stdin: Option<&str>) -> (i32, String, String) {
    use std::io::Write;
    let mut child = bin()
        .args(args)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(s) = stdin {
        child.stdin.take().unwrap().write_all(s.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn errors_exit_nonzero_with_one_line_reasons() {
    for (args, code) in [
        (vec!["query", "-e", "MATCH (n) FOR TT FROM 5 TO 1 RETURN n"], "invalid_range"),
        (vec!["query", "-e", "MATCH n RETURN n"], "parse_error"),
        (vec!["--anchor", "fixed:0", "repl"], "invalid_policy"),
        (vec!["load", "/nonexistent/file.jsonl"], "io_error"),
        (vec!["--nope"], "usage"),
    ] {
        let (status, _, err) = run(&args, Some(""));
        assert_ne!(status, 0, "{args:?}");
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with(&format!("error: {code}: ")), "{args:?}: {err}");
    }
}

#[test]
fn load_then_query_a_persistent_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("db");
    let wl = dir.path().join("w.jsonl");
    let store = store.to_str().unwrap();
    let (s, _, e) = run(&["--seed", "2", "generate", "--ops", "50", "--vertices", "5", "--edges", "5", "--out", wl.to_str().unwrap()], None);
    assert_eq!(s, 0, "{e}");
    let (s, out, e) = run(&["--store", store, "load", wl.to_str().unwrap()], None);
    assert_eq!(s, 0, "{e}");
    assert!(out.starts_with("applied 60 ops"), "{out}");
    let (s, out, e) = run(&["--store", store, "--tsv", "query", "-e", "MATCH (n:User) RETURN count_me"], None);
    assert_ne!(s, 0);
    assert!(e.contains("eval_error") || e.contains("parse_error"), "{out}{e}");
    let (s, out, e) = run(&["--store", store, "--tsv", "query", "-e", "MATCH (n {id: 0}) FOR TT FROM 0 TO 100000 RETURN n._st"], None);
    assert_eq!(s, 0, "{e}");
    assert_eq!(out.lines().next(), Some("n._st"));
    assert!(out.lines().count() >= 2, "{out}");
}

#[test]
fn repl_meta_commands() {
    let script = "CREATE (n:User {id: 1})\nMATCH (n {id: 1}) SET n.age = 5\n:gc\n:stats\n:help\nMATCH (n) RETURN n.age\n:quit\nMATCH (n) RETURN n\n";
    let (s, out, _) = run(&["--gc-interval-ms", "off", "repl"], Some(script));
    assert_eq!(s, 0);
    assert!(out.contains("nodes created: 1"), "{out}");
    assert!(out.contains("migrated 1 versions"), "{out}");
    assert!(out.contains("hist_entries: 1"), "{out}");
    assert!(out.contains(":quit"), "{out}");
    assert!(out.contains("(1 row)"), "{out}");
    // Nothing after :quit runs.
    assert_eq!(out.matches("row").count(), 1, "{out}");
}

#[test]
fn bench_writes_csv() {
    let (s, out, e) = run(&["--anchor", "fixed:10", "bench", "--ops", "300", "--queries", "5", "--clients", "3"], None);
    assert_eq!(s, 0, "{e}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(tempograph_bench::harness::CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').count() == 10));
}
