use tempograph::AnchorPolicy;
use tempograph_bench::check::{equivalence_suite, load, oracle_check, GcState};
use tempograph_bench::workload::GenConfig;

#[test]
fn small_workloads_match_oracle_in_every_gc_state() {
    for seed in 1..=3 {
        let cfg = GenConfig { seed, base_vertices: 20, base_edges: 40, ops: 300, ..Default::default() };
        for gc in GcState::ALL {
            let (db, oracle) = load(&cfg, AnchorPolicy::Fixed(4), gc, None).unwrap();
            let suite = equivalence_suite(&oracle, seed, 30);
            if let Err(d) = oracle_check(&db, &oracle, &suite) {
                panic!("seed {seed} {gc:?}\n{d}");
            }
        }
    }
}
