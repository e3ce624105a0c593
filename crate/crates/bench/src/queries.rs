//! Query templates: the four benchmark shapes plus randomized variants.

use rand::Rng;
use tempograph::Timestamp;

/// A concrete query and the template it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub id: String,
    pub text: String,
}

impl QuerySpec {
    fn new(id: &str, text: String) -> Self {
        QuerySpec { id: id.to_string(), text }
    }
}

pub fn q1(id: i64, t: Timestamp) -> QuerySpec {
    QuerySpec::new("Q1", format!("MATCH (n:User {{id: {id}}}) FOR TT AS OF {} RETURN n", t.0))
}

pub fn q2(id: i64, t1: Timestamp, t2: Timestamp) -> QuerySpec {
    QuerySpec::new(
        "Q2",
        format!("MATCH (n:User {{id: {id}}}) FOR TT FROM {} TO {} RETURN n", t1.0, t2.0),
    )
}

pub fn q3(id: i64, t: Timestamp) -> QuerySpec {
    QuerySpec::new(
        "Q3",
        format!("MATCH (n:User {{id: {id}}})-[e]->(m) FOR TT AS OF {} RETURN n, e, m", t.0),
    )
}

pub fn q4(id: i64, t1: Timestamp, t2: Timestamp) -> QuerySpec {
    QuerySpec::new(
        "Q4",
        format!(
            "MATCH (n:User {{id: {id}}})-[e]->(m) FOR TT FROM {} TO {} RETURN n, e, m",
            t1.0, t2.0
        ),
    )
}

/// Picks an ordered pair of timestamps from `[lo, hi]`.
pub fn slice(rng: &mut impl Rng, lo: u64, hi: u64) -> (Timestamp, Timestamp) {
    let a = rng.random_range(lo..=hi);
    let b = rng.random_range(lo..=hi);
    (Timestamp(a.min(b)), Timestamp(a.max(b)))
}

fn temporal(rng: &mut impl Rng, lo: u64, hi: u64) -> String {
    match rng.random_range(0..3) {
        0 => String::new(),
        1 => format!(" FOR TT AS OF {}", rng.random_range(lo..=hi)),
        _ => {
            let (a, b) = slice(rng, lo, hi);
            format!(" FOR TT FROM {} TO {}", a.0, b.0)
        }
    }
}

/// A random read query over the generated schema. `ids` are vertex `id`
/// values to anchor lookups on; `[lo, hi]` bounds the timestamps used.
pub fn random_query(rng: &mut impl Rng, ids: &[i64], lo: u64, hi: u64) -> QuerySpec {
    let id = if ids.is_empty() { 0 } else { ids[rng.random_range(0..ids.len())] };
    let tt = temporal(rng, lo, hi);
    let arrow = |rng: &mut dyn rand::RngCore, var: &str| {
        let ty = match rng.random_range(0..3) {
            0 => ":KNOWS",
            1 => ":FOLLOWS",
            _ => "",
        };
        match rng.random_range(0..3) {
            0 => format!("-[{var}{ty}]->"),
            1 => format!("<-[{var}{ty}]-"),
            _ => format!("-[{var}{ty}]-"),
        }
    };
    let age = rng.random_range(18..80);
    let (kind, text) = match rng.random_range(0..8) {
        0 => ("point", format!("MATCH (n:User {{id: {id}}}){tt} RETURN n")),
        1 => ("props", format!("MATCH (n {{id: {id}}}){tt} RETURN n.age, n.name, n._st, n._ed")),
        2 => (
            "expand",
            format!("MATCH (n:User {{id: {id}}}){}(m){tt} RETURN n, e, m", arrow(rng, "e")),
        ),
        3 => (
            "filter",
            format!("MATCH (n:User) WHERE n.age >= {age}{tt} RETURN id(n), n.age"),
        ),
        4 => (
            "admins",
            format!("MATCH (n:Admin){tt} RETURN n.name, n.status, n.score"),
        ),
        5 => (
            "edges",
            format!(
                "MATCH (a){}(b) WHERE e.w > {}{tt} RETURN id(a), type(e), e.w, id(b), e._st",
                arrow(rng, "e"),
                rng.random_range(0..10)
            ),
        ),
        6 => (
            "two_hop",
            format!(
                "MATCH (n {{id: {id}}}){}(m){}(k){tt} RETURN id(m), id(k)",
                arrow(rng, "r"),
                arrow(rng, "s")
            ),
        ),
        _ => (
            "status",
            format!("MATCH (n:User) WHERE n.status IS NULL OR n.score < 0.5{tt} RETURN n"),
        ),
    };
    QuerySpec::new(kind, text)
}

/// Non-temporal queries used to confirm the historical store stays cold.
pub fn current_suite(ids: &[i64]) -> Vec<QuerySpec> {
    let mut out = vec![
        QuerySpec::new("cur_all", "MATCH (n) RETURN n".into()),
        QuerySpec::new("cur_edges", "MATCH (a)-[e]->(b) RETURN a, e, b".into()),
        QuerySpec::new("cur_filter", "MATCH (n:User) WHERE n.age > 40 RETURN n.name".into()),
        QuerySpec::new("cur_both", "MATCH (a:Admin)-[e]-(b) RETURN id(a), id(e), id(b)".into()),
    ];
    for id in ids.iter().take(20) {
        out.push(QuerySpec::new("cur_point", format!("MATCH (n:User {{id: {id}}}) RETURN n")));
        out.push(QuerySpec::new(
            "cur_expand",
            format!("MATCH (n {{id: {id}}})-[e]->(m) RETURN n, e, m"),
        ));
    }
    out
}
