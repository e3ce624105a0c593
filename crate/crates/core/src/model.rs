//! Temporal property graph vocabulary: timestamps, lifespans, identifiers,
//! property values, and the two temporal predicates shared by every layer.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

/// Logical transaction time in milliseconds.
///
/// `0` stands for negative infinity and `u64::MAX` for positive infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const NEG_INF: Timestamp = Timestamp(0);
    pub const INF: Timestamp = Timestamp(u64::MAX);

    pub fn is_inf(self) -> bool {
        self == Self::INF
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::INF => f.write_str("+inf"),
            Self::NEG_INF => f.write_str("-inf"),
            Timestamp(t) => write!(f, "{t}"),
        }
    }
}

/// Half-open validity period `[st, ed)` of one version of an object part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lifespan {
    pub st: Timestamp,
    pub ed: Timestamp,
}

impl Lifespan {
    pub fn new(st: Timestamp, ed: Timestamp) -> Self {
        debug_assert!(st < ed, "empty lifespan [{st}, {ed})");
        Lifespan { st, ed }
    }

    /// `[st, +inf)`
    pub fn open(st: Timestamp) -> Self {
        Lifespan::new(st, Timestamp::INF)
    }

    /// `[-inf, +inf)`, the initial lifespan of a vertex adjacency part.
    pub fn universal() -> Self {
        Lifespan::new(Timestamp::NEG_INF, Timestamp::INF)
    }

    pub fn is_current(&self) -> bool {
        self.ed.is_inf()
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.st <= t && t < self.ed
    }
}

impl fmt::Display for Lifespan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.st, self.ed)
    }
}

/// Graph object identifier. Vertices and edges draw from one counter, so an id
/// never names both a vertex and an edge, and ids are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gid(pub u64);

impl fmt::Display for Gid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A property value.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "string",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Str(_) => 4,
        }
    }
}

// Structural equality: floats compare by bit pattern so that values can live in
// sets and stored states compare byte-identically.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl std::hash::Hash for Value {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Str(s) => write!(f, "'{}'", escape_str(s)),
        }
    }
}

/// Escapes a string for single-quoted literal syntax.
pub fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

pub type PropertyMap = BTreeMap<String, Value>;
pub type LabelSet = BTreeSet<String>;

/// Builds a property map from `(key, value)` pairs.
pub fn props<K, V, I>(pairs: I) -> PropertyMap
where
    K: Into<String>,
    V: Into<Value>,
    I: IntoIterator<Item = (K, V)>,
{
    pairs
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .collect()
}

pub fn labels<S: Into<String>, I: IntoIterator<Item = S>>(names: I) -> LabelSet {
    names.into_iter().map(Into::into).collect()
}

/// Closed query window `[t1, t2]`; a time-point query has `t1 == t2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeCondition {
    pub t1: Timestamp,
    pub t2: Timestamp,
}

impl TimeCondition {
    /// Returns `None` when `t1 > t2`.
    pub fn new(t1: Timestamp, t2: Timestamp) -> Option<Self> {
        (t1 <= t2).then_some(TimeCondition { t1, t2 })
    }

    pub fn point(t: Timestamp) -> Self {
        TimeCondition { t1: t, t2: t }
    }

    pub fn is_point(&self) -> bool {
        self.t1 == self.t2
    }
}

impl fmt::Display for TimeCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.t1, self.t2)
    }
}

/// Whether a version with lifespan `lifespan` is live at some instant of `cond`.
pub fn legal_check(lifespan: Lifespan, cond: TimeCondition) -> bool {
    lifespan.st <= cond.t2 && lifespan.ed > cond.t1
}

/// Narrows `cond` to the instants at which `lifespan` is live.
///
/// The upper bound is clamped to `ed - 1` because lifespans are half-open.
pub fn refine_condition(cond: TimeCondition, lifespan: Lifespan) -> Option<TimeCondition> {
    if lifespan.ed == Timestamp::NEG_INF {
        return None;
    }
    let t1 = cond.t1.max(lifespan.st);
    let t2 = cond.t2.min(Timestamp(lifespan.ed.0 - 1));
    TimeCondition::new(t1, t2)
}

/// Global logical clock shared by transaction starts and commits.
#[derive(Debug)]
pub struct LogicalClock {
    counter: AtomicU64,
}

impl LogicalClock {
    pub fn new(init: u64) -> Self {
        LogicalClock {
            counter: AtomicU64::new(init),
        }
    }

    /// Returns a timestamp strictly greater than every previously returned one.
    pub fn next_commit_timestamp(&self) -> Timestamp {
        let prev = self.counter.fetch_add(1, AtomicOrdering::SeqCst);
        assert!(prev < u64::MAX - 1, "logical clock exhausted");
        Timestamp(prev + 1)
    }

    /// The most recently issued value.
    pub fn now(&self) -> Timestamp {
        Timestamp(self.counter.load(AtomicOrdering::SeqCst))
    }

    /// Moves the clock forward to at least `t`.
    pub fn advance_to(&self, t: u64) {
        self.counter.fetch_max(t, AtomicOrdering::SeqCst);
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        LogicalClock::new(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ls(st: u64, ed: u64) -> Lifespan {
        Lifespan::new(Timestamp(st), Timestamp(ed))
    }

    fn cond(t1: u64, t2: u64) -> TimeCondition {
        TimeCondition::new(Timestamp(t1), Timestamp(t2)).unwrap()
    }

    // Instants of `c` at which `l` is live, by enumeration.
    fn live_instants(l: Lifespan, c: TimeCondition) -> Vec<u64> {
        (c.t1.0..=c.t2.0).filter(|t| l.st.0 <= *t && *t < l.ed.0).collect()
    }

    #[test]
    fn legal_check_examples() {
        assert!(legal_check(ls(100, 160), cond(100, 100)));
        assert!(legal_check(Lifespan::universal(), cond(3, 9)));
        assert!(!legal_check(ls(10, 20), cond(20, 25)));
        assert!(legal_check(ls(10, 20), cond(19, 19)));
        assert!(legal_check(ls(10, 20), cond(5, 10)));
    }

    #[test]
    fn legal_check_matches_enumeration_on_grid() {
        for st in 0..12u64 {
            for ed in st + 1..13 {
                for t1 in 0..14u64 {
                    for t2 in t1..14 {
                        let l = ls(st, ed);
                        let c = cond(t1, t2);
                        assert_eq!(
                            legal_check(l, c),
                            !live_instants(l, c).is_empty(),
                            "{l} vs {c}"
                        );
                    }
                    assert_eq!(legal_check(ls(st, ed), cond(t1, t1)), st <= t1 && t1 < ed);
                }
            }
        }
    }

    #[test]
    fn refine_examples() {
        assert_eq!(refine_condition(cond(5, 50), ls(10, 20)), Some(cond(10, 19)));
        assert_eq!(
            refine_condition(cond(5, 50), Lifespan::open(Timestamp(0))),
            Some(cond(5, 50))
        );
        assert_eq!(refine_condition(cond(5, 9), ls(10, 20)), None);
    }

    #[test]
    fn refine_agrees_with_legal_check_on_grid() {
        for st in 0..10u64 {
            for ed in st + 1..11 {
                for t1 in 0..12u64 {
                    for t2 in t1..12 {
                        let l = ls(st, ed);
                        let c = cond(t1, t2);
                        let refined = refine_condition(c, l);
                        assert_eq!(refined.is_some(), legal_check(l, c));
                        if let Some(r) = refined {
                            let expect = live_instants(l, c);
                            let got: Vec<u64> = (r.t1.0..=r.t2.0).collect();
                            assert_eq!(got, expect);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn clock_counts_up() {
        let clock = LogicalClock::new(1);
        assert_eq!(clock.next_commit_timestamp(), Timestamp(2));
        let mut last = Timestamp(2);
        for _ in 0..1_000_000 {
            let t = clock.next_commit_timestamp();
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn clock_is_atomic_across_threads() {
        let clock = std::sync::Arc::new(LogicalClock::new(0));
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let c = clock.clone();
                std::thread::spawn(move || {
                    (0..10_000)
                        .map(|_| c.next_commit_timestamp().0)
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<u64> = handles
            .into_iter()
            .flat_map(|h| {
                let v = h.join().unwrap();
                assert!(v.windows(2).all(|w| w[0] < w[1]));
                v
            })
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 40_000);
    }

    proptest! {
        #[test]
        fn refined_window_only_contains_live_instants(
            st in 0u64..1000, len in 1u64..1000, t1 in 0u64..2500, w in 0u64..500
        ) {
            let l = ls(st, st + len);
            let c = cond(t1, t1 + w);
            if let Some(r) = refine_condition(c, l) {
                prop_assert!(legal_check(l, TimeCondition::point(r.t1)));
                prop_assert!(legal_check(l, TimeCondition::point(r.t2)));
                prop_assert!(r.t1 >= c.t1 && r.t2 <= c.t2);
            } else {
                prop_assert!(!legal_check(l, c));
            }
        }
    }
}
