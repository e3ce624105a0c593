use std::sync::Arc;

use tempograph::db::{dedup, Origin, PartVersion};
use tempograph::model::props;
use tempograph::storage::SeenVersion;
use tempograph::state::{PartState, VertexProps};
use tempograph::{AnchorPolicy, Cell, Database, DbConfig, Error, ExecOptions, GcMode, Lifespan, Timestamp, Value};

fn db_with(policy: AnchorPolicy) -> Arc<Database> {
    Database::in_memory(DbConfig {
        policy,
        gc: GcMode::Off,
        ..Default::default()
    })
    .unwrap()
}

fn db() -> Arc<Database> {
    db_with(AnchorPolicy::default())
}

fn run(db: &Database, q: &str) -> Vec<Vec<Cell>> {
    db.query(q).unwrap_or_else(|e| panic!("{q}: {e}")).rows
}

fn values(db: &Database, q: &str) -> Vec<Vec<Value>> {
    let mut rows: Vec<Vec<Value>> = run(db, q)
        .into_iter()
        .map(|r| r.into_iter().map(|c| c.as_value().cloned().expect("scalar")).collect())
        .collect();
    rows.sort();
    rows
}

fn s(x: &str) -> Value {
    Value::Str(x.into())
}

fn ts(t: Option<Timestamp>) -> u64 {
    t.unwrap().0
}

/// Jack owns a phone that messaged a transaction. At `t_n1` the phone IP
/// and the transaction location change and a second transaction appears.
struct Jack {
    db: Arc<Database>,
    t_n: u64,
    t_n1: u64,
}

fn jack() -> Jack {
    let db = db();
    let t_n = ts(db
        .query(
            "CREATE (n:Customer {Name: 'Jack'})-[:Owns]->(p:Phone {IP: 'Singapore'})\
             -[:Messages]->(t:Transaction {Loc: 'Paris', id: 1})",
        )
        .unwrap()
        .commit_ts);
    let t_n1 = ts(db
        .query(
            "MATCH (p:Phone), (t:Transaction {id: 1}) \
             SET p.IP = 'New York', t.Loc = 'Berlin'",
        )
        .unwrap()
        .commit_ts);
    db.query("MATCH (p:Phone) CREATE (p)-[:Messages]->(:Transaction {Loc: 'Rome', id: 2})")
        .unwrap();
    Jack { db, t_n, t_n1 }
}

const JACK_Q: &str = "MATCH (n:Customer)-[r]-(p:Phone)-[:Messages]-(t:Transaction) WHERE n.Name='Jack' FOR TT AS OF {t} RETURN p.IP, t.Loc";

#[test]
fn jack_phone_ip_as_of_t_n() {
    let j = jack();
    for gc in [false, true] {
        if gc {
            let r = j.db.gc().unwrap();
            assert!(r.versions_migrated > 0);
        }
        let q = JACK_Q.replace("{t}", &j.t_n.to_string());
        assert_eq!(values(&j.db, &q), vec![vec![s("Singapore"), s("Paris")]], "gc={gc}");
        let q = JACK_Q.replace("{t}", &j.t_n1.to_string());
        assert_eq!(values(&j.db, &q), vec![vec![s("New York"), s("Berlin")]], "gc={gc}");
        let now = values(&j.db, &JACK_Q.replace("{t}", "now()"));
        assert_eq!(now, vec![vec![s("New York"), s("Berlin")], vec![s("New York"), s("Rome")]]);
        // Before anything existed.
        assert!(values(&j.db, &JACK_Q.replace("{t}", &(j.t_n - 1).to_string())).is_empty());
    }
}

#[test]
fn historical_version_comes_from_the_store_after_gc() {
    let j = jack();
    j.db.gc().unwrap();
    let q = format!("MATCH (p:Phone) FOR TT AS OF {} RETURN p.IP, p._st, p._ed", j.t_n);
    let res = j.db.query(&q).unwrap();
    assert_eq!(
        res.rows,
        vec![vec![
            Cell::Value(s("Singapore")),
            Cell::Value(Value::Int(j.t_n as i64)),
            Cell::Value(Value::Int(j.t_n1 as i64)),
        ]]
    );
    assert!(res.counters.hist_entries_touched > 0);
}

#[test]
fn empty_store_yields_no_rows() {
    let db = db();
    assert!(run(&db, "MATCH (n) RETURN n").is_empty());
    assert!(run(&db, "MATCH (n) FOR TT FROM 0 TO 100 RETURN n").is_empty());
}

#[test]
fn reversed_range_fails_at_evaluation() {
    let db = db();
    let e = db.query("MATCH (n) FOR TT FROM 10 TO 5 RETURN n").unwrap_err();
    assert!(matches!(e, Error::InvalidRange { .. }), "{e}");
    assert!(matches!(db.query("MATCH (n) FOR TT AS OF -1 RETURN n"), Err(Error::Eval(_))));
    assert!(matches!(db.query("MATCH (n) FOR TT AS OF 'x' RETURN n"), Err(Error::Eval(_))));
    assert!(matches!(db.query("MATCH (n) FOR TT AS OF n.x RETURN n"), Err(Error::Eval(_))));
}

#[test]
fn current_queries_never_read_history() {
    let j = jack();
    j.db.gc().unwrap();
    assert!(j.db.hist().stats().entries() > 0);
    let res = j
        .db
        .query("MATCH (n:Customer)-[r]-(p:Phone)-[:Messages]-(t:Transaction) RETURN p.IP, t.Loc")
        .unwrap();
    assert_eq!(res.rows.len(), 2);
    assert_eq!(res.counters.hist_entries_touched, 0);
    assert_eq!(res.counters.anchors_seeked, 0);
}

/// One vertex with `n` committed values of `x`, written at the returned times.
fn versioned(db: &Database, n: i64) -> Vec<u64> {
    let mut times = vec![ts(db.query("CREATE (:V {k: 1, x: 0})").unwrap().commit_ts)];
    for i in 1..n {
        times.push(ts(db.query(&format!("MATCH (v:V) SET v.x = {i}")).unwrap().commit_ts));
    }
    times
}

#[test]
fn time_slice_returns_exactly_the_overlapping_versions() {
    let db = db_with(AnchorPolicy::Fixed(3));
    let times = versioned(&db, 12);
    // Versions 4..=8 overlap [times[4], times[8]].
    let q = format!("MATCH (v:V) FOR TT FROM {} TO {} RETURN v.x", times[4], times[8]);
    let want: Vec<Vec<Value>> = (4..=8).map(|i| vec![Value::Int(i)]).collect();
    assert_eq!(values(&db, &q), want);
    db.gc().unwrap();
    assert_eq!(values(&db, &q), want);
    // A window ending just before a change does not see the new version.
    let q = format!("MATCH (v:V) FOR TT FROM {} TO {} RETURN v.x", times[4], times[8] - 1);
    assert_eq!(values(&db, &q).len(), 4);
}

#[test]
fn point_reconstruction_is_bounded_by_the_anchor_interval() {
    let u = 10;
    let db = db_with(AnchorPolicy::Fixed(u));
    let times = versioned(&db, 100);
    db.gc().unwrap();
    for (i, t) in times.iter().enumerate().take(99) {
        let res = db.query(&format!("MATCH (v:V) FOR TT AS OF {t} RETURN v.x")).unwrap();
        assert_eq!(res.rows, vec![vec![Cell::Value(Value::Int(i as i64))]]);
        assert_eq!(res.counters.anchors_seeked, 1, "t={t}");
        assert!(res.counters.deltas_applied <= u, "t={t}: {:?}", res.counters);
    }
}

#[test]
fn windows_after_deletion_replay_nothing() {
    let db = db_with(AnchorPolicy::Fixed(10));
    let times = versioned(&db, 15);
    let gone = ts(db.query("MATCH (v:V) DETACH DELETE v").unwrap().commit_ts);
    db.gc().unwrap();
    let res = db.query(&format!("MATCH (v:V) FOR TT AS OF {gone} RETURN v.x")).unwrap();
    assert!(res.rows.is_empty());
    assert_eq!((res.counters.anchors_seeked, res.counters.deltas_applied), (0, 0));
    let q = format!("MATCH (v:V) FOR TT AS OF {} RETURN v.x", gone - 1);
    assert_eq!(values(&db, &q), vec![vec![Value::Int(14)]]);
    assert_eq!(values(&db, &format!("MATCH (v:V) FOR TT AS OF {} RETURN v.x", times[12])), vec![vec![Value::Int(12)]]);
}

#[test]
fn deleted_edge_only_matches_before_deletion() {
    let db = db();
    let t0 = ts(db.query("CREATE (:A {id: 1})-[:R {w: 1}]->(:B {id: 2})").unwrap().commit_ts);
    let t1 = ts(db.query("MATCH (a:A)-[r:R]->(b) SET r.w = 2").unwrap().commit_ts);
    let t2 = ts(db.query("MATCH (a:A)-[r:R]->(b) DELETE r").unwrap().commit_ts);
    let t3 = ts(db.query("MATCH (b:B) SET b.id = 3").unwrap().commit_ts);
    for gc in [false, true] {
        if gc {
            db.gc().unwrap();
        }
        let q = format!("MATCH (a:A)-[r]->(b) FOR TT FROM {t0} TO {t3} RETURN r.w, b.id, r._st, r._ed");
        assert_eq!(
            values(&db, &q),
            vec![
                vec![Value::Int(1), Value::Int(2), Value::Int(t0 as i64), Value::Int(t1 as i64)],
                vec![Value::Int(2), Value::Int(2), Value::Int(t1 as i64), Value::Int(t2 as i64)],
            ],
            "gc={gc}"
        );
        let q = format!("MATCH (a:A)-[r]->(b) FOR TT AS OF {t2} RETURN b");
        assert!(values(&db, &q).is_empty());
        assert!(run(&db, "MATCH (a)-[r]->(b) RETURN r").is_empty());
        // The neighbour still exists on its own.
        let q = format!("MATCH (b:B) FOR TT FROM {t0} TO {t3} RETURN b.id");
        assert_eq!(values(&db, &q), vec![vec![Value::Int(2)], vec![Value::Int(3)]]);
    }
}

#[test]
fn directions_and_undirected_matches() {
    let db = db();
    db.query("CREATE (a:N {id: 1})-[:E]->(b:N {id: 2}), (b)-[:E]->(c:N {id: 3}), (c)-[:E]->(c)")
        .unwrap();
    let pairs = |q: &str| values(&db, q);
    assert_eq!(
        pairs("MATCH (x)-[:E]->(y) RETURN x.id, y.id"),
        vec![
            vec![Value::Int(1), Value::Int(2)],
            vec![Value::Int(2), Value::Int(3)],
            vec![Value::Int(3), Value::Int(3)]
        ]
    );
    assert_eq!(
        pairs("MATCH (x {id: 2})<-[:E]-(y) RETURN y.id"),
        vec![vec![Value::Int(1)]]
    );
    assert_eq!(
        pairs("MATCH (x {id: 2})-[:E]-(y) RETURN y.id"),
        vec![vec![Value::Int(1)], vec![Value::Int(3)]]
    );
    // A self-loop matches once when undirected.
    assert_eq!(pairs("MATCH (x {id: 3})-[r]-(y {id: 3}) RETURN id(r)").len(), 1);
    assert_eq!(pairs("MATCH (x)-[:E]->(y)-[:E]->(z) RETURN x.id, z.id").len(), 3);
    assert_eq!(pairs("MATCH (x)-->(y), (y)-->(z) WHERE x.id = 1 RETURN z.id"), vec![vec![Value::Int(3)]]);
}

#[test]
fn write_statements() {
    let db = db();
    let r = db.query("CREATE (a:P {name: 'a'}), (b:P {name: 'b'}), (a)-[:K {s: 1}]->(b)").unwrap();
    assert_eq!((r.stats.nodes_created, r.stats.edges_created), (2, 1));
    let r = db.query("MATCH (p:P) SET p.age = 5, p.name = NULL").unwrap();
    assert_eq!(r.stats.properties_set, 4);
    assert_eq!(values(&db, "MATCH (p:P) RETURN p.age, p.name"), vec![vec![Value::Int(5), Value::Null]; 2]);

    let before = db.state_digest().unwrap();
    let e = db.query("MATCH (p:P) DELETE p").unwrap_err();
    assert!(matches!(e, Error::Eval(_)), "{e}");
    assert_eq!(db.state_digest().unwrap(), before, "failed delete left no trace");

    let r = db.query("MATCH (p:P) DETACH DELETE p").unwrap();
    assert_eq!(r.stats.nodes_deleted, 2);
    assert!(run(&db, "MATCH (n) RETURN n").is_empty());
    let q = format!("MATCH (a)-[k:K]->(b) FOR TT AS OF {} RETURN k.s", ts(r.commit_ts) - 1);
    assert_eq!(values(&db, &q), vec![vec![Value::Int(1)]]);
}

#[test]
fn explicit_transaction_sees_its_own_writes() {
    let db = db();
    let mut txn = db.begin();
    let stmt = tempograph::cypher::parse("CREATE (:T {v: 1})").unwrap();
    tempograph::exec::execute_in(&mut txn, &stmt, ExecOptions::default()).unwrap();
    let read = tempograph::cypher::parse("MATCH (t:T) RETURN t.v").unwrap();
    let inside = tempograph::exec::execute_in(&mut txn, &read, ExecOptions::default()).unwrap();
    assert_eq!(inside.rows.len(), 1);
    assert!(run(&db, "MATCH (t:T) RETURN t.v").is_empty());
    // A failing write aborts the transaction.
    let bad = tempograph::cypher::parse("MATCH (t:T) SET t._st = 1").unwrap();
    assert!(tempograph::exec::execute_in(&mut txn, &bad, ExecOptions::default()).is_err());
    assert!(matches!(txn.commit(), Err(Error::TxnNotActive)));
    assert!(run(&db, "MATCH (t:T) RETURN t.v").is_empty());
}

#[test]
fn three_valued_logic_and_type_errors() {
    let db = db();
    db.query("CREATE (:X {a: 1, f: 1.0, s: 'x'}), (:X {a: 2})").unwrap();
    assert_eq!(values(&db, "MATCH (n:X) WHERE n.s = 'x' OR n.s IS NULL RETURN n.a").len(), 2);
    assert_eq!(values(&db, "MATCH (n:X) WHERE n.s <> 'x' RETURN n.a").len(), 0);
    assert_eq!(values(&db, "MATCH (n:X) WHERE NOT n.s = 'x' RETURN n.a").len(), 0);
    assert_eq!(values(&db, "MATCH (n:X) WHERE n.missing = 1 OR TRUE RETURN n.a").len(), 2);
    assert_eq!(values(&db, "MATCH (n:X) WHERE n.missing = 1 AND FALSE RETURN n.a").len(), 0);
    assert_eq!(values(&db, "MATCH (n:X {f: 1}) RETURN n.a"), vec![vec![Value::Int(1)]]);
    assert_eq!(values(&db, "MATCH (n:X) WHERE n.a = 1.0 RETURN n.a"), vec![vec![Value::Int(1)]]);
    assert_eq!(
        values(&db, "MATCH (n:X {a: 1}) RETURN n.a + 1, n.a / 2, n.f / 2, n.s + 'y', -n.a, 7 % 3"),
        vec![vec![Value::Int(2), Value::Int(0), Value::Float(0.5), s("xy"), Value::Int(-1), Value::Int(1)]]
    );
    assert_eq!(values(&db, "MATCH (n:X) WHERE n.s = 1 RETURN n.a").len(), 0);
    for bad in [
        "MATCH (n:X) WHERE n.s < 1 RETURN n",
        "MATCH (n:X) WHERE n.a RETURN n",
        "MATCH (n:X) RETURN n.a / 0",
        "MATCH (n:X) RETURN m",
        "MATCH (n:X) RETURN nope(n)",
        "MATCH (n:X)-[n]->(m) RETURN n",
        "MATCH (n:X) RETURN 9223372036854775807 + 1",
    ] {
        assert!(matches!(db.query(bad), Err(Error::Eval(_))), "{bad}");
    }
}

#[test]
fn strict_coverage_requires_whole_window() {
    let db = db();
    let times = versioned(&db, 4);
    let stmt = tempograph::cypher::parse(&format!(
        "MATCH (v:V) FOR TT FROM {} TO {} RETURN v.x",
        times[1], times[2]
    ))
    .unwrap();
    let overlap = db.execute(&stmt, ExecOptions::default()).unwrap();
    assert_eq!(overlap.rows.len(), 2);
    let strict = db.execute(&stmt, ExecOptions { strict_coverage: true }).unwrap();
    assert!(strict.rows.is_empty());
    let stmt = tempograph::cypher::parse(&format!(
        "MATCH (v:V) FOR TT FROM {} TO {} RETURN v.x",
        times[1],
        times[2] - 1
    ))
    .unwrap();
    let strict = db.execute(&stmt, ExecOptions { strict_coverage: true }).unwrap();
    assert_eq!(strict.rows, vec![vec![Cell::Value(Value::Int(1))]]);
}

#[test]
fn index_shortcut_matches_full_scan() {
    let db = db();
    for i in 0..20 {
        db.query(&format!("CREATE (:U {{k: {}, i: {i}}})", i % 4)).unwrap();
    }
    let t = db.now().0;
    db.query("MATCH (u:U) WHERE u.i < 10 SET u.k = 9").unwrap();
    let indexed = values(&db, &format!("MATCH (u {{k: 1}}) FOR TT AS OF {t} RETURN u.i"));
    let scanned = values(&db, &format!("MATCH (u) WHERE u.k = 1 FOR TT AS OF {t} RETURN u.i"));
    assert_eq!(indexed, scanned);
    assert_eq!(indexed.len(), 5);
    assert_eq!(values(&db, "MATCH (u {k: 9}) RETURN u.i").len(), 10);
    assert_eq!(values(&db, "MATCH (u {k: 1}) RETURN u.i").len(), 2);
}

fn pv(st: u64, ed: u64, origin: Origin) -> PartVersion {
    PartVersion {
        version: SeenVersion {
            lifespan: Lifespan::new(Timestamp(st), Timestamp(ed)),
            state: PartState::Vertex(VertexProps {
                labels: Default::default(),
                props: props([("o", origin == Origin::Current)]),
            }),
        },
        origin,
    }
}

#[test]
fn dedup_keeps_current_copy_and_is_idempotent() {
    let input = vec![
        pv(5, 9, Origin::Historical),
        pv(1, 5, Origin::Historical),
        pv(5, 9, Origin::Current),
        pv(9, 12, Origin::Current),
    ];
    let once = dedup(input);
    assert_eq!(once.len(), 3);
    assert_eq!(once[1].origin, Origin::Current);
    let twice = dedup(once.clone());
    assert_eq!(once, twice);
    let clean = vec![pv(1, 2, Origin::Historical), pv(2, 3, Origin::Current)];
    assert_eq!(dedup(clean.clone()), clean);
}
