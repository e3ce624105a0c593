use proptest::prelude::*;
use tempograph::cypher::ast::*;
use tempograph::cypher::{parse, render};
use tempograph::Value;

pub const CORPUS: &[&str] = &[
    "MATCH (n:Customer)-[r]-(p:Phone)-[:Messages]-(t:Transaction) WHERE n.Name='Jack' FOR TT AS OF 100 RETURN p.IP, t.Loc",
    "MATCH (n) RETURN n",
    "MATCH (n) FOR TT FROM 10 TO 5 RETURN n",
    "match (n:Person) where n.age >= 18 return n.name as name",
    "MATCH (a)-[e:KNOWS]->(b) RETURN a, e, b",
    "MATCH (a)<-[e:KNOWS]-(b) RETURN id(a), id(b)",
    "MATCH (a)--(b) RETURN a",
    "MATCH (a)-->(b)<--(c) RETURN c",
    "MATCH (a), (b) WHERE id(a) < id(b) RETURN a, b",
    "MATCH (n {name: 'x', age: 3}) RETURN n",
    "MATCH (n:A:B) RETURN n",
    "MATCH (n) WHERE n.x IS NULL RETURN n",
    "MATCH (n) WHERE n.x IS NOT NULL AND NOT n.y = 2 RETURN n",
    "MATCH (n) WHERE n.a = 1 OR n.b = 2 AND n.c = 3 RETURN n",
    "MATCH (n) WHERE (n.a = 1 OR n.b = 2) AND n.c = 3 RETURN n",
    "MATCH (n) WHERE NOT (n.a = 1 OR n.b = 2) RETURN n",
    "MATCH (n) RETURN n.a + n.b * 2 - 1",
    "MATCH (n) RETURN (n.a + n.b) * 2",
    "MATCH (n) RETURN n.a - (n.b - n.c)",
    "MATCH (n) RETURN -n.a, - -n.b, -(3), -3, -3.5",
    "MATCH (n) RETURN 10 % 3, 7 / 2, 1.5e10, 0.25, 1e300",
    "MATCH (n) RETURN -9223372036854775808",
    "MATCH (n) RETURN 'it\\'s', 'tab\\tnew\\nline', 'back\\\\slash'",
    "MATCH (n) RETURN TRUE, false, null",
    "MATCH (n) FOR TT AS OF now() RETURN n",
    "MATCH (n) FOR TT AS OF now() - 100 RETURN n.x",
    "MATCH (n) FOR TT FROM 0 TO now() RETURN n._st, n._ed",
    "MATCH (n:Person)-[:LIVES_IN]->(c:City) WHERE c.name = 'Oslo' FOR TT FROM 5 TO 50 RETURN n.name",
    "MATCH (n) WHERE n.score <> 3 RETURN n",
    "MATCH (n) WHERE n.score != 3 RETURN n",
    "MATCH (`weird var`:`Odd Label` {`a key`: 1}) RETURN `weird var`.`a key`",
    "MATCH (n) RETURN n.`match`, n.return",
    "MATCH (n:`MATCH`) RETURN n AS `RETURN`",
    "MATCH (a)-[r {w: 2}]->(b) RETURN r.w",
    "MATCH (a)-[{w: 2}]->(b) RETURN a",
    "MATCH ({k: 1}) RETURN 1",
    "CREATE (n:Person {name: 'Ann', age: 30})",
    "CREATE (a:P {id: 1})-[:KNOWS {since: 2020}]->(b:P {id: 2})",
    "CREATE (a), (b), (a)-[:E]->(b)",
    "MATCH (a {id: 1}), (b {id: 2}) CREATE (a)-[:KNOWS]->(b)",
    "MATCH (a {id: 1}) CREATE (a)<-[:OWNS]-(c:Car)",
    "MATCH (n {id: 1}) SET n.age = n.age + 1",
    "MATCH (n {id: 1}) SET n.a = 1, n.b = 'two', n.c = NULL",
    "MATCH (a)-[r:KNOWS]->(b) SET r.weight = 0.5",
    "MATCH (n {id: 1}) DELETE n",
    "MATCH (n {id: 1}) DETACH DELETE n",
    "MATCH (a)-[r]->(b) DELETE r",
    "MATCH (a)-[r]->(b) WHERE a.x = 1 DELETE r, a",
    "MATCH (n) RETURN n;",
    "MATCH (n)\n  // comment line\n  WHERE n.x > 1\n  RETURN n",
];

#[test]
fn jack_example_parses_with_as_of() {
    let Statement::Match(q) = parse(CORPUS[0]).unwrap() else { panic!("expected MATCH") };
    assert_eq!(q.temporal, Some(TemporalClause::AsOf(Expr::Lit(Value::Int(100)))));
    assert_eq!(q.clause.patterns.len(), 1);
    assert_eq!(q.clause.patterns[0].steps.len(), 2);
    let (r, p) = &q.clause.patterns[0].steps[0];
    assert_eq!(r.direction, RelDirection::Both);
    assert_eq!(r.var.as_deref(), Some("r"));
    assert_eq!(p.labels, vec!["Phone".to_string()]);
    assert_eq!(q.clause.patterns[0].steps[1].0.rel_type.as_deref(), Some("Messages"));
    assert_eq!(q.returns.len(), 2);
    assert_eq!(q.returns[0].column_name(), "p.IP");
}

#[test]
fn plain_match_has_no_temporal_clause() {
    let Statement::Match(q) = parse("MATCH (n) RETURN n").unwrap() else { panic!() };
    assert!(q.temporal.is_none());
}

#[test]
fn reversed_range_is_syntactically_valid() {
    let Statement::Match(q) = parse("MATCH (n) FOR TT FROM 10 TO 5 RETURN n").unwrap() else { panic!() };
    assert_eq!(
        q.temporal,
        Some(TemporalClause::FromTo(Expr::Lit(Value::Int(10)), Expr::Lit(Value::Int(5))))
    );
}

#[test]
fn as_of_renders_fixed_keywords() {
    let s = render(&parse("match (n) for tt as of 7 return n").unwrap());
    assert_eq!(s, "MATCH (n) FOR TT AS OF 7 RETURN n");
    let s = render(&parse("match (n) for tt from 1 to 2 return n").unwrap());
    assert_eq!(s, "MATCH (n) FOR TT FROM 1 TO 2 RETURN n");
}

#[test]
fn property_maps_render_sorted() {
    let s = render(&parse("CREATE (n:P {zeta: 1, alpha: 2, mid: 3})").unwrap());
    assert_eq!(s, "CREATE (n:P {alpha: 2, mid: 3, zeta: 1})");
}

#[test]
fn corpus_round_trips() {
    assert!(CORPUS.len() >= 50);
    for q in CORPUS {
        let ast = parse(q).unwrap_or_else(|e| panic!("{q}: {e}"));
        let text = render(&ast);
        let again = parse(&text).unwrap_or_else(|e| panic!("{q} -> {text}: {e}"));
        assert_eq!(ast, again, "{q} -> {text}");
        assert_eq!(text, render(&again));
    }
}

#[test]
fn precedence() {
    let Statement::Match(q) = parse("MATCH (n) WHERE n.a = 1 OR n.b = 2 AND n.c = 3 RETURN n").unwrap() else {
        panic!()
    };
    assert!(matches!(q.clause.where_, Some(Expr::Or(_, ref r)) if matches!(**r, Expr::And(..))));
    let Statement::Match(q) = parse("MATCH (n) RETURN 1 - 2 - 3").unwrap() else { panic!() };
    let Expr::Arith(ArithOp::Sub, l, _) = &q.returns[0].expr else { panic!() };
    assert!(matches!(**l, Expr::Arith(ArithOp::Sub, ..)));
}

#[test]
fn errors_carry_position_and_expectations() {
    let e = parse("MATCH (n)\nRETURN").unwrap_err();
    assert_eq!((e.line, e.col), (2, 7));
    assert!(e.expected.iter().any(|x| x == "expression"), "{e}");

    let e = parse("MATCH (n) FOR TT AT 5 RETURN n").unwrap_err();
    assert_eq!(e.col, 18);
    assert!(e.expected.contains(&"AS".to_string()) && e.expected.contains(&"FROM".to_string()));

    let e = parse("MATCH n RETURN n").unwrap_err();
    assert_eq!(e.expected, vec!["'('".to_string()]);
    assert!(e.to_string().starts_with("1:7: unexpected 'n'"));
    assert_eq!(e.caret("MATCH n RETURN n"), "MATCH n RETURN n\n      ^");
}

#[test]
fn rejected_inputs() {
    for bad in [
        "",
        "RETURN 1",
        "MATCH (n) RETURN n extra",
        "MATCH (n) WHERE 1 < 2 < 3 RETURN n",
        "MATCH (a)<-[r]->(b) RETURN a",
        "MATCH (a)-[*1..2]->(b) RETURN a",
        "MATCH (a)-[:X|Y]->(b) RETURN a",
        "MATCH (n {a: 1, a: 2}) RETURN n",
        "MATCH (n) RETURN 9223372036854775808",
        "MATCH (n) RETURN -9223372036854775809",
        "MATCH (n) FOR TT AS OF 1 FOR TT AS OF 2 RETURN n",
        "MATCH (n) RETURN n WHERE n.x = 1",
        "MATCH (match) RETURN 1",
        "MATCH (n) SET n = 1",
        "MATCH (n) DETACH n",
        "MATCH (n) FOR TT AS OF 1",
        "MATCH (n) RETURN 'open",
    ] {
        assert!(parse(bad).is_err(), "accepted {bad:?}");
    }
}

#[test]
fn temporal_clause_must_follow_where() {
    assert!(parse("MATCH (n) FOR TT AS OF 1 WHERE n.x = 1 RETURN n").is_err());
    assert!(parse("MATCH (n) WHERE n.x = 1 FOR TT AS OF 1 RETURN n").is_ok());
}

proptest! {
    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse(&text);
    }

    #[test]
    fn token_soup_never_panics(words in proptest::collection::vec(
        prop::sample::select(vec![
            "MATCH", "(", ")", "[", "]", "-", "->", "<-", "{", "}", ":", ",", ".", "n", "x", "1", "'s'",
            "WHERE", "FOR", "TT", "AS", "OF", "FROM", "TO", "RETURN", "=", "<", "AND", "NOT", "IS", "NULL",
            "CREATE", "SET", "DELETE", "DETACH", "-1.5", "*", "now", "`q`",
        ]),
        0..30,
    )) {
        let text = words.join(" ");
        if let Ok(ast) = parse(&text) {
            prop_assert_eq!(parse(&render(&ast)).unwrap(), ast);
        }
    }
}
