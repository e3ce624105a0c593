use tempograph::db::Origin;
use tempograph::model::{labels, props, Gid, Lifespan, TimeCondition, Timestamp, Value};
use tempograph::state::{AdjEntry, Part, PartState};
use tempograph::{Database, DbConfig, Error, GcMode, ReadCounters};

fn db(gc: GcMode) -> std::sync::Arc<Database> {
    Database::in_memory(DbConfig {
        gc,
        ..Default::default()
    })
    .unwrap()
}

fn name_of(s: &PartState) -> Value {
    s.props().unwrap().get("name").cloned().unwrap_or(Value::Null)
}

/// (lifespan, name) of every VP version of `gid`.
fn vp_history(db: &Database, gid: Gid) -> Vec<(Lifespan, Value)> {
    let snap = db.snapshot();
    let all = TimeCondition::new(Timestamp::NEG_INF, Timestamp::INF).unwrap();
    db.part_versions(&snap, gid, Part::Vp, Some(all), &mut ReadCounters::default())
        .unwrap()
        .into_iter()
        .map(|v| (v.version.lifespan, name_of(&v.version.state)))
        .collect()
}

fn rename(db: &Database, gid: Gid, name: &str) -> Timestamp {
    let mut t = db.begin();
    t.set_properties(gid, props([("name", name)])).unwrap();
    t.commit().unwrap()
}

#[test]
fn updates_tile_time_and_survive_migration() {
    let db = db(GcMode::Off);
    let mut t = db.begin();
    let v = t.create_vertex(labels(["Person"]), props([("name", "a")])).unwrap();
    let t0 = t.commit().unwrap();
    let t1 = rename(&db, v, "b");
    let t2 = rename(&db, v, "c");

    let expect = vec![
        (Lifespan::new(t0, t1), Value::from("a")),
        (Lifespan::new(t1, t2), Value::from("b")),
        (Lifespan::open(t2), Value::from("c")),
    ];
    assert_eq!(vp_history(&db, v), expect);
    assert!(db.unreclaimed_records() > 0);

    let report = db.gc().unwrap();
    assert_eq!(report.versions_migrated, 2);
    assert_eq!(db.unreclaimed_records(), 0);
    assert_eq!(vp_history(&db, v), expect);

    // The current version stays in place; old ones come from history.
    let snap = db.snapshot();
    let mut c = ReadCounters::default();
    let vs = db
        .part_versions(&snap, v, Part::Vp, Some(TimeCondition::point(t1)), &mut c)
        .unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].origin, Origin::Historical);
    assert_eq!(c.anchors_seeked, 1);
}

#[test]
fn reader_snapshot_blocks_migration() {
    let db = db(GcMode::Off);
    let mut t = db.begin();
    let v = t.create_vertex(labels(["P"]), props([("name", "a")])).unwrap();
    t.commit().unwrap();
    let reader = db.snapshot();
    rename(&db, v, "b");
    assert_eq!(db.gc().unwrap().versions_migrated, 0);

    // The old reader still sees "a" as current.
    let vs = db
        .part_versions(&reader, v, Part::Vp, None, &mut ReadCounters::default())
        .unwrap();
    assert_eq!(name_of(&vs[0].version.state), Value::from("a"));
    drop(reader);
    assert_eq!(db.gc().unwrap().versions_migrated, 1);
}

#[test]
fn uncommitted_writes_are_private() {
    let db = db(GcMode::Off);
    let mut t = db.begin();
    let v = t.create_vertex(labels(["P"]), props([("name", "a")])).unwrap();
    t.commit().unwrap();

    let mut w = db.begin();
    w.set_properties(v, props([("name", "draft")])).unwrap();
    let other = db.snapshot();
    let seen = db
        .part_versions(&other, v, Part::Vp, None, &mut ReadCounters::default())
        .unwrap();
    assert_eq!(name_of(&seen[0].version.state), Value::from("a"));
    let own = db
        .part_versions(w.state(), v, Part::Vp, None, &mut ReadCounters::default())
        .unwrap();
    assert_eq!(name_of(&own[0].version.state), Value::from("draft"));
    drop(other);
    w.abort();
    assert_eq!(vp_history(&db, v).len(), 1);
    assert_eq!(vp_history(&db, v)[0].1, Value::from("a"));
}

#[test]
fn concurrent_writers_conflict() {
    let db = db(GcMode::Off);
    let mut t = db.begin();
    let v = t.create_vertex(labels(["P"]), props([("name", "a")])).unwrap();
    t.commit().unwrap();

    let mut a = db.begin();
    let mut b = db.begin();
    a.set_properties(v, props([("name", "x")])).unwrap();
    let err = b.set_properties(v, props([("name", "y")])).unwrap_err();
    assert!(matches!(err, Error::WriteConflict(g) if g == v));
    assert!(matches!(b.commit(), Err(Error::TxnNotActive)));
    a.commit().unwrap();

    // A writer that began before a's commit still conflicts afterwards.
    let mut c = db.begin();
    let mut d = db.begin();
    c.set_properties(v, props([("name", "c")])).unwrap();
    c.commit().unwrap();
    assert!(matches!(
        d.set_properties(v, props([("name", "d")])),
        Err(Error::WriteConflict(_))
    ));
}

#[test]
fn constraints_leave_state_untouched() {
    let db = db(GcMode::EveryCommit);
    let mut t = db.begin();
    let a = t.create_vertex(labels(["P"]), props([("name", "a")])).unwrap();
    let b = t.create_vertex(labels(["P"]), props([("name", "b")])).unwrap();
    let e = t.create_edge(a, b, "Knows", props::<&str, Value, _>([])).unwrap();
    t.commit().unwrap();
    let mut t = db.begin();
    t.delete_vertex(b).unwrap();
    t.commit().unwrap();

    let before = db.state_digest().unwrap();
    let mut t = db.begin();
    let c = t.create_vertex(labels(["P"]), props([("name", "c")])).unwrap();
    assert!(matches!(t.create_edge(a, b, "Knows", Default::default()), Err(Error::EndpointMissing(g)) if g == b));
    drop(t);
    assert!(db.current().vertex(c).is_none());
    let mut t = db.begin();
    assert!(matches!(t.set_properties(b, props([("x", 1i64)])), Err(Error::ObjectMissing(_))));
    let mut t = db.begin();
    assert!(matches!(t.set_properties(e, props([("x", 1i64)])), Err(Error::ObjectMissing(_))));
    let mut t = db.begin();
    assert!(matches!(t.delete_edge(e), Err(Error::ObjectMissing(_))));
    drop(t);
    assert_eq!(db.state_digest().unwrap(), before);
}

#[test]
fn deleting_a_vertex_closes_its_edges() {
    let db = db(GcMode::Off);
    let mut t = db.begin();
    let a = t.create_vertex(labels(["P"]), Default::default()).unwrap();
    let b = t.create_vertex(labels(["P"]), Default::default()).unwrap();
    let e = t.create_edge(a, b, "Knows", Default::default()).unwrap();
    let t0 = t.commit().unwrap();
    let mut t = db.begin();
    t.delete_vertex(b).unwrap();
    let t1 = t.commit().unwrap();

    for gc in [false, true] {
        if gc {
            db.gc().unwrap();
        }
        let snap = db.snapshot();
        let mut c = ReadCounters::default();
        let all = Some(TimeCondition::new(Timestamp::NEG_INF, Timestamp::INF).unwrap());
        let ep = db.part_versions(&snap, e, Part::Ep, all, &mut c).unwrap();
        assert_eq!(ep.len(), 1);
        assert_eq!(ep[0].version.lifespan, Lifespan::new(t0, t1));
        let ve = db.part_versions(&snap, a, Part::Ve, all, &mut c).unwrap();
        let outs: Vec<(Lifespan, usize)> = ve
            .iter()
            .map(|v| (v.version.lifespan, v.version.state.as_adj().unwrap().outgoing.len()))
            .collect();
        assert_eq!(outs, vec![(Lifespan::new(t0, t1), 1), (Lifespan::open(t1), 0)]);
        assert!(ve[0]
            .version
            .state
            .as_adj()
            .unwrap()
            .outgoing
            .contains(&AdjEntry { edge: e, neighbor: b }));
        assert!(db.part_versions(&snap, b, Part::Vp, None, &mut c).unwrap().is_empty());
    }
}

#[test]
fn created_and_deleted_in_one_txn_leaves_nothing() {
    let db = db(GcMode::EveryCommit);
    let before = db.state_digest().unwrap();
    let mut t = db.begin();
    let v = t.create_vertex(labels(["P"]), Default::default()).unwrap();
    t.set_properties(v, props([("k", 1i64)])).unwrap();
    t.delete_vertex(v).unwrap();
    t.commit().unwrap();
    assert_eq!(vp_history(&db, v), vec![]);
    assert_eq!(db.state_digest().unwrap(), before);
}

#[test]
fn abort_restores_adjacency() {
    let db = db(GcMode::Off);
    let mut t = db.begin();
    let a = t.create_vertex(labels(["P"]), Default::default()).unwrap();
    let b = t.create_vertex(labels(["P"]), Default::default()).unwrap();
    t.commit().unwrap();
    let before = db.state_digest().unwrap();
    let mut t = db.begin();
    let e = t.create_edge(a, b, "Knows", Default::default()).unwrap();
    t.set_properties(a, props([("k", 1i64)])).unwrap();
    t.abort();
    assert!(db.current().edge(e).is_none());
    assert_eq!(db.state_digest().unwrap(), before);
}

#[test]
fn retention_purges_and_clamps() {
    let db = Database::in_memory(DbConfig {
        gc: GcMode::Off,
        retention_ms: Some(1),
        policy: tempograph::AnchorPolicy::Fixed(2),
        sync: false,
    })
    .unwrap();
    let mut t = db.begin();
    let v = t.create_vertex(labels(["P"]), props([("name", "v0")])).unwrap();
    t.commit().unwrap();
    let mut ts = vec![];
    for i in 1..8 {
        ts.push(rename(&db, v, &format!("v{i}")));
    }
    let report = db.gc().unwrap();
    assert!(report.purged > 0);
    let h = db.hist().purge_horizon();
    assert_eq!(h, Timestamp(db.now().0 - 1));
    let hist = vp_history(&db, v);
    assert!(hist.iter().all(|(l, _)| l.ed > h));
    assert_eq!(hist.last().unwrap().1, Value::from("v7"));
    let snap = db.snapshot();
    let early = db
        .part_versions(&snap, v, Part::Vp, Some(TimeCondition::point(ts[0])), &mut ReadCounters::default())
        .unwrap();
    assert!(early.is_empty());
}

#[test]
fn reopen_restores_history_and_current_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DbConfig {
        gc: GcMode::Off,
        ..Default::default()
    };
    let (v, hist, digest, now);
    {
        let db = Database::open(dir.path(), cfg.clone()).unwrap();
        let mut t = db.begin();
        v = t.create_vertex(labels(["P"]), props([("name", "a")])).unwrap();
        let w = t.create_vertex(labels(["P"]), props([("name", "w")])).unwrap();
        t.create_edge(v, w, "Knows", Default::default()).unwrap();
        t.commit().unwrap();
        rename(&db, v, "b");
        rename(&db, v, "c");
        let mut t = db.begin();
        t.delete_vertex(w).unwrap();
        t.commit().unwrap();
        db.checkpoint().unwrap();
        hist = vp_history(&db, v);
        digest = db.state_digest().unwrap();
        now = db.now();
    }
    let db = Database::open(dir.path(), cfg).unwrap();
    assert!(db.now() >= now);
    assert_eq!(vp_history(&db, v), hist);
    assert_eq!(db.state_digest().unwrap(), digest);
    // New ids do not collide with old ones.
    let mut t = db.begin();
    let x = t.create_vertex(labels(["P"]), Default::default()).unwrap();
    assert!(x.0 > v.0 + 1);
    t.commit().unwrap();
    rename(&db, v, "d");
    assert_eq!(vp_history(&db, v).len(), 4);
}

#[test]
fn background_gc_drains_chains() {
    let db = db(GcMode::Interval(std::time::Duration::from_millis(5)));
    let mut t = db.begin();
    let v = t.create_vertex(labels(["P"]), props([("name", "a")])).unwrap();
    t.commit().unwrap();
    for i in 0..20 {
        rename(&db, v, &format!("n{i}"));
    }
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(5);
    while db.unreclaimed_records() > 0 && std::time::Instant::now() < deadline {
        std::thread::sleep(std::time::Duration::from_millis(5));
    }
    assert_eq!(db.unreclaimed_records(), 0);
    db.stop_background_gc();
    assert_eq!(vp_history(&db, v).len(), 21);
}
