//! Recursive-descent parser.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Pos, Spanned, Tok};
use super::ParseError;
use crate::model::Value;

/// Parses one statement, optionally terminated by `;`.
pub fn parse(src: &str) -> Result<Statement, ParseError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        i: 0,
        expected: Vec::new(),
    };
    let stmt = p.statement()?;
    p.eat(&Tok::Semi);
    p.expect_eof()?;
    Ok(stmt)
}

struct Parser {
    toks: Vec<Spanned>,
    i: usize,
    // Alternatives tried at the current token, reported on failure.
    expected: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        self.expected.clear();
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.pos(), msg, self.expected.clone())
    }

    fn unexpected(&self) -> ParseError {
        self.error(format!("unexpected {}", self.peek()))
    }

    fn check(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            return true;
        }
        self.expected.push(t.to_string());
        false
    }

    fn eat(&mut self, t: &Tok) -> bool {
        let hit = self.check(t);
        if hit {
            self.advance();
        }
        hit
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn check_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw)) {
            return true;
        }
        self.expected.push(kw.to_string());
        false
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.check_kw(kw);
        if hit {
            self.advance();
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.check(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Quoted(s) => {
                self.advance();
                Ok(s)
            }
            Tok::Word(w) if !is_keyword(&w) => {
                self.advance();
                Ok(w)
            }
            _ => {
                self.expected.push("identifier".into());
                Err(self.unexpected())
            }
        }
    }

    /// Property keys, labels and types may reuse keyword spellings.
    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Quoted(s) | Tok::Word(s) => {
                self.advance();
                Ok(s)
            }
            _ => {
                self.expected.push("name".into());
                Err(self.unexpected())
            }
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        if self.eat_kw("CREATE") {
            let patterns = self.patterns()?;
            return Ok(Statement::Create(CreateStmt { bind: None, patterns }));
        }
        if !self.eat_kw("MATCH") {
            return Err(self.unexpected());
        }
        let patterns = self.patterns()?;
        let where_ = if self.eat_kw("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let clause = MatchClause { patterns, where_ };

        if self.eat_kw("FOR") {
            let temporal = Some(self.temporal()?);
            if self.check(&Tok::Comma) {
                return Err(self.error("one FOR TT clause applies to the whole MATCH"));
            }
            self.expect_kw("RETURN")?;
            let returns = self.return_items()?;
            return Ok(Statement::Match(MatchQuery { clause, temporal, returns }));
        }
        if self.eat_kw("RETURN") {
            let returns = self.return_items()?;
            return Ok(Statement::Match(MatchQuery {
                clause,
                temporal: None,
                returns,
            }));
        }
        if self.eat_kw("CREATE") {
            let patterns = self.patterns()?;
            return Ok(Statement::Create(CreateStmt {
                bind: Some(clause),
                patterns,
            }));
        }
        if self.eat_kw("SET") {
            let mut items = vec![self.set_item()?];
            while self.eat(&Tok::Comma) {
                items.push(self.set_item()?);
            }
            return Ok(Statement::Set(SetStmt { bind: clause, items }));
        }
        let detach = self.eat_kw("DETACH");
        if detach || self.check_kw("DELETE") {
            self.expect_kw("DELETE")?;
            let mut vars = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                vars.push(self.ident()?);
            }
            return Ok(Statement::Delete(DeleteStmt {
                bind: clause,
                detach,
                vars,
            }));
        }
        Err(self.unexpected())
    }

    fn temporal(&mut self) -> Result<TemporalClause, ParseError> {
        self.expect_kw("TT")?;
        if self.eat_kw("AS") {
            self.expect_kw("OF")?;
            return Ok(TemporalClause::AsOf(self.expr()?));
        }
        if self.eat_kw("FROM") {
            let t1 = self.expr()?;
            self.expect_kw("TO")?;
            let t2 = self.expr()?;
            return Ok(TemporalClause::FromTo(t1, t2));
        }
        Err(self.unexpected())
    }

    fn return_items(&mut self) -> Result<Vec<ReturnItem>, ParseError> {
        let mut items = Vec::new();
        loop {
            let expr = self.expr()?;
            let alias = if self.eat_kw("AS") { Some(self.ident()?) } else { None };
            items.push(ReturnItem { expr, alias });
            if !self.eat(&Tok::Comma) {
                return Ok(items);
            }
        }
    }

    fn set_item(&mut self) -> Result<SetItem, ParseError> {
        let var = self.ident()?;
        self.expect(&Tok::Dot)?;
        let key = self.name()?;
        self.expect(&Tok::Eq)?;
        let value = self.expr()?;
        Ok(SetItem { var, key, value })
    }

    fn patterns(&mut self) -> Result<Vec<Pattern>, ParseError> {
        let mut out = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            out.push(self.pattern()?);
        }
        Ok(out)
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let start = self.node()?;
        let mut steps = Vec::new();
        while self.check(&Tok::Minus) || self.check(&Tok::Lt) {
            let rel = self.rel()?;
            steps.push((rel, self.node()?));
        }
        Ok(Pattern { start, steps })
    }

    fn node(&mut self) -> Result<NodePattern, ParseError> {
        self.expect(&Tok::LParen)?;
        let mut n = NodePattern::default();
        if matches!(self.peek(), Tok::Word(_) | Tok::Quoted(_)) {
            n.var = Some(self.ident()?);
        }
        while self.eat(&Tok::Colon) {
            n.labels.push(self.name()?);
        }
        if self.check(&Tok::LBrace) {
            n.props = self.prop_map()?;
        }
        self.expect(&Tok::RParen)?;
        Ok(n)
    }

    fn rel(&mut self) -> Result<RelPattern, ParseError> {
        let incoming = self.eat(&Tok::Lt);
        self.expect(&Tok::Minus)?;
        let mut r = RelPattern {
            var: None,
            rel_type: None,
            props: BTreeMap::new(),
            direction: RelDirection::Both,
        };
        // `--`, `-->` and `<--` leave out the bracket.
        if self.eat(&Tok::LBracket) {
            if matches!(self.peek(), Tok::Word(_) | Tok::Quoted(_)) {
                r.var = Some(self.ident()?);
            }
            if self.eat(&Tok::Colon) {
                r.rel_type = Some(self.name()?);
                if self.check(&Tok::Pipe) {
                    return Err(self.error("alternative relationship types are not supported"));
                }
            }
            if self.check(&Tok::Star) {
                return Err(self.error("variable-length relationships are not supported"));
            }
            if self.check(&Tok::LBrace) {
                r.props = self.prop_map()?;
            }
            self.expect(&Tok::RBracket)?;
        }
        self.expect(&Tok::Minus)?;
        let outgoing = self.eat(&Tok::Gt);
        r.direction = match (incoming, outgoing) {
            (true, true) => return Err(self.error("relationship cannot point both ways")),
            (true, false) => RelDirection::In,
            (false, true) => RelDirection::Out,
            (false, false) => RelDirection::Both,
        };
        Ok(r)
    }

    fn prop_map(&mut self) -> Result<BTreeMap<String, Expr>, ParseError> {
        self.expect(&Tok::LBrace)?;
        let mut map = BTreeMap::new();
        if self.eat(&Tok::RBrace) {
            return Ok(map);
        }
        loop {
            let pos = self.pos();
            let key = self.name()?;
            self.expect(&Tok::Colon)?;
            let v = self.expr()?;
            if map.insert(key.clone(), v).is_some() {
                return Err(ParseError::new(pos, format!("duplicate property key {key}"), Vec::new()));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(map)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.and_expr()?;
        while self.eat_kw("OR") {
            l = Expr::Or(Box::new(l), Box::new(self.and_expr()?));
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.not_expr()?;
        while self.eat_kw("AND") {
            l = Expr::And(Box::new(l), Box::new(self.not_expr()?));
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => {
                self.expected.push("comparison".into());
                return None;
            }
        };
        self.advance();
        Some(op)
    }

    // Comparisons do not chain: `a < b < c` is rejected.
    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let l = self.add_expr()?;
        if self.eat_kw("IS") {
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull(Box::new(l), negated));
        }
        let Some(op) = self.cmp_op() else { return Ok(l) };
        let r = self.add_expr()?;
        if matches!(self.peek(), Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
            || matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case("IS"))
        {
            return Err(self.error("comparisons cannot be chained; use AND"));
        }
        Ok(Expr::Cmp(op, Box::new(l), Box::new(r)))
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.mul_expr()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                ArithOp::Add
            } else if self.eat(&Tok::Minus) {
                ArithOp::Sub
            } else {
                return Ok(l);
            };
            l = Expr::Arith(op, Box::new(l), Box::new(self.mul_expr()?));
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.unary()?;
        loop {
            let op = if self.eat(&Tok::Star) {
                ArithOp::Mul
            } else if self.eat(&Tok::Slash) {
                ArithOp::Div
            } else if self.eat(&Tok::Percent) {
                ArithOp::Mod
            } else {
                return Ok(l);
            };
            l = Expr::Arith(op, Box::new(l), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if !self.eat(&Tok::Minus) {
            return self.atom();
        }
        match self.peek().clone() {
            Tok::Int(digits) => {
                let pos = self.pos();
                self.advance();
                format!("-{digits}")
                    .parse::<i64>()
                    .map(|i| Expr::Lit(Value::Int(i)))
                    .map_err(|_| ParseError::new(pos, format!("integer literal -{digits} out of range"), Vec::new()))
            }
            Tok::Float(x) => {
                self.advance();
                Ok(Expr::Lit(Value::Float(-x)))
            }
            _ => Ok(Expr::Neg(Box::new(self.unary()?))),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(digits) => {
                self.advance();
                digits
                    .parse::<i64>()
                    .map(|i| Expr::Lit(Value::Int(i)))
                    .map_err(|_| ParseError::new(pos, format!("integer literal {digits} out of range"), Vec::new()))
            }
            Tok::Float(x) => {
                self.advance();
                Ok(Expr::Lit(Value::Float(x)))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Lit(Value::Str(s)))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("TRUE") => {
                self.advance();
                Ok(Expr::Lit(Value::Bool(true)))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("FALSE") => {
                self.advance();
                Ok(Expr::Lit(Value::Bool(false)))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("NULL") => {
                self.advance();
                Ok(Expr::Lit(Value::Null))
            }
            Tok::Word(_) | Tok::Quoted(_) => {
                let name = self.ident()?;
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(&Tok::RParen)?;
                    }
                    return Ok(Expr::Call(name, args));
                }
                if self.eat(&Tok::Dot) {
                    let key = self.name()?;
                    return Ok(Expr::Prop(name, key));
                }
                Ok(Expr::Var(name))
            }
            _ => {
                self.expected.push("expression".into());
                Err(self.unexpected())
            }
        }
    }
}
