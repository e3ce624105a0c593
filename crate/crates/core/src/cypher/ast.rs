//! Statement trees and their canonical text form.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use crate::model::{escape_str, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Match(MatchQuery),
    Create(CreateStmt),
    Set(SetStmt),
    Delete(DeleteStmt),
}

/// `MATCH ... [WHERE ...]`, shared by reads and by writes that bind first.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchClause {
    pub patterns: Vec<Pattern>,
    pub where_: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchQuery {
    pub clause: MatchClause,
    pub temporal: Option<TemporalClause>,
    pub returns: Vec<ReturnItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateStmt {
    pub bind: Option<MatchClause>,
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetStmt {
    pub bind: MatchClause,
    pub items: Vec<SetItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetItem {
    pub var: String,
    pub key: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeleteStmt {
    pub bind: MatchClause,
    pub detach: bool,
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemporalClause {
    AsOf(Expr),
    FromTo(Expr, Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

impl ReturnItem {
    /// Column header: the alias, else the rendered expression.
    pub fn column_name(&self) -> String {
        self.alias.clone().unwrap_or_else(|| self.expr.to_string())
    }
}

/// Alternating nodes and relationships, starting and ending with a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub start: NodePattern,
    pub steps: Vec<(RelPattern, NodePattern)>,
}

impl Pattern {
    pub fn nodes(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub labels: Vec<String>,
    pub props: BTreeMap<String, Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelDirection {
    /// `-[]->`
    Out,
    /// `<-[]-`
    In,
    /// `-[]-`
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub rel_type: Option<String>,
    pub props: BTreeMap<String, Expr>,
    pub direction: RelDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Prop(String, String),
    Call(String, Vec<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    IsNull(Box<Expr>, bool),
}

// Binding strength, loosest first.
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_NOT: u8 = 3;
const P_CMP: u8 = 4;
const P_ADD: u8 = 5;
const P_MUL: u8 = 6;
const P_NEG: u8 = 7;
const P_ATOM: u8 = 8;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Or(..) => P_OR,
            Expr::And(..) => P_AND,
            Expr::Not(_) => P_NOT,
            Expr::Cmp(..) | Expr::IsNull(..) => P_CMP,
            Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => P_ADD,
            Expr::Arith(..) => P_MUL,
            Expr::Neg(_) => P_NEG,
            // A negative literal renders with a leading minus.
            Expr::Lit(Value::Int(i)) if *i < 0 => P_NEG,
            Expr::Lit(Value::Float(x)) if x.is_sign_negative() => P_NEG,
            _ => P_ATOM,
        }
    }

    fn write_sub(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }

    /// Left-associative binary operator at precedence `p`.
    fn write_binary(f: &mut fmt::Formatter<'_>, p: u8, l: &Expr, op: &str, r: &Expr) -> fmt::Result {
        l.write_sub(f, l.prec() < p)?;
        write!(f, " {op} ")?;
        r.write_sub(f, r.prec() <= p)
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub(crate) const KEYWORDS: &[&str] = &[
    "MATCH", "WHERE", "RETURN", "CREATE", "SET", "DELETE", "DETACH", "FOR", "TT", "AS", "OF", "FROM", "TO", "AND",
    "OR", "NOT", "TRUE", "FALSE", "NULL", "IS",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

/// Identifier in canonical form: bare when unambiguous, else backticked.
pub struct Ident<'a>(pub &'a str);

impl fmt::Display for Ident<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_plain_ident(self.0) && !is_keyword(self.0) {
            f.write_str(self.0)
        } else {
            write!(f, "`{}`", self.0.replace('`', "``"))
        }
    }
}

fn write_literal(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Null => f.write_str("NULL"),
        Value::Bool(true) => f.write_str("TRUE"),
        Value::Bool(false) => f.write_str("FALSE"),
        Value::Int(i) => write!(f, "{i}"),
        // Debug keeps a '.' or exponent, so the text re-lexes as a float.
        Value::Float(x) => write!(f, "{x:?}"),
        Value::Str(s) => write!(f, "'{}'", escape_str(s)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write_literal(f, v),
            Expr::Var(v) => write!(f, "{}", Ident(v)),
            Expr::Prop(v, k) => write!(f, "{}.{}", Ident(v), Ident(k)),
            Expr::Call(name, args) => {
                write!(f, "{}(", Ident(name))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Not(e) => {
                f.write_str("NOT ")?;
                e.write_sub(f, e.prec() < P_NOT)
            }
            Expr::And(l, r) => Expr::write_binary(f, P_AND, l, "AND", r),
            Expr::Or(l, r) => Expr::write_binary(f, P_OR, l, "OR", r),
            Expr::Cmp(op, l, r) => {
                l.write_sub(f, l.prec() <= P_CMP)?;
                write!(f, " {} ", op.symbol())?;
                r.write_sub(f, r.prec() <= P_CMP)
            }
            Expr::Arith(op, l, r) => {
                let p = self.prec();
                Expr::write_binary(f, p, l, op.symbol(), r)
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                // `-5` would reparse as a literal.
                let numeric = matches!(**e, Expr::Lit(Value::Int(_) | Value::Float(_)));
                e.write_sub(f, numeric || e.prec() <= P_NEG)
            }
            Expr::IsNull(e, negated) => {
                e.write_sub(f, e.prec() <= P_CMP)?;
                f.write_str(if *negated { " IS NOT NULL" } else { " IS NULL" })
            }
        }
    }
}

fn write_props(f: &mut fmt::Formatter<'_>, props: &BTreeMap<String, Expr>) -> fmt::Result {
    if props.is_empty() {
        return Ok(());
    }
    f.write_str(" {")?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}: {v}", Ident(k))?;
    }
    f.write_str("}")
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('(')?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        for l in &self.labels {
            write!(f, ":{}", Ident(l))?;
        }
        if self.var.is_none() && self.labels.is_empty() {
            // "( {k: v})" reads oddly; drop the separating space.
            let mut s = String::new();
            for (i, (k, v)) in self.props.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write!(s, "{}: {v}", Ident(k))?;
            }
            if !self.props.is_empty() {
                write!(f, "{{{s}}}")?;
            }
        } else {
            write_props(f, &self.props)?;
        }
        f.write_char(')')
    }
}

impl fmt::Display for RelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.direction == RelDirection::In { "<-[" } else { "-[" })?;
        if let Some(v) = &self.var {
            write!(f, "{}", Ident(v))?;
        }
        if let Some(t) = &self.rel_type {
            write!(f, ":{}", Ident(t))?;
        }
        if self.var.is_none() && self.rel_type.is_none() && !self.props.is_empty() {
            let mut s = String::new();
            for (i, (k, v)) in self.props.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write!(s, "{}: {v}", Ident(k))?;
            }
            write!(f, "{{{s}}}")?;
        } else {
            write_props(f, &self.props)?;
        }
        f.write_str(if self.direction == RelDirection::Out { "]->" } else { "]-" })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (r, n) in &self.steps {
            write!(f, "{r}{n}")?;
        }
        Ok(())
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl fmt::Display for MatchClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MATCH ")?;
        write_list(f, &self.patterns)?;
        if let Some(w) = &self.where_ {
            write!(f, " WHERE {w}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TemporalClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalClause::AsOf(t) => write!(f, "FOR TT AS OF {t}"),
            TemporalClause::FromTo(a, b) => write!(f, "FOR TT FROM {a} TO {b}"),
        }
    }
}

impl fmt::Display for ReturnItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)?;
        if let Some(a) = &self.alias {
            write!(f, " AS {}", Ident(a))?;
        }
        Ok(())
    }
}

impl fmt::Display for SetItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} = {}", Ident(&self.var), Ident(&self.key), self.value)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Match(q) => {
                write!(f, "{}", q.clause)?;
                if let Some(t) = &q.temporal {
                    write!(f, " {t}")?;
                }
                f.write_str(" RETURN ")?;
                write_list(f, &q.returns)
            }
            Statement::Create(c) => {
                if let Some(b) = &c.bind {
                    write!(f, "{b} ")?;
                }
                f.write_str("CREATE ")?;
                write_list(f, &c.patterns)
            }
            Statement::Set(s) => {
                write!(f, "{} SET ", s.bind)?;
                write_list(f, &s.items)
            }
            Statement::Delete(d) => {
                write!(f, "{} {}DELETE ", d.bind, if d.detach { "DETACH " } else { "" })?;
                let vars: Vec<Ident> = d.vars.iter().map(|v| Ident(v)).collect();
                write_list(f, &vars)
            }
        }
    }
}

/// Canonical text of a statement.
pub fn render(stmt: &Statement) -> String {
    stmt.to_string()
}
