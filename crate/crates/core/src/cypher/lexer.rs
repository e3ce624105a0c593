use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Bare word: identifier or keyword.
    Word(String),
    /// Backtick-quoted identifier.
    Quoted(String),
    /// Unsigned integer digits; sign and range are handled by the parser.
    Int(String),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Pipe,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Semi,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Word(w) => return write!(f, "'{w}'"),
            Tok::Quoted(w) => return write!(f, "`{w}`"),
            Tok::Int(d) => return write!(f, "integer {d}"),
            Tok::Float(x) => return write!(f, "float {x}"),
            Tok::Str(_) => "string literal",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::LBracket => "'['",
            Tok::RBracket => "']'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::Colon => "':'",
            Tok::Comma => "','",
            Tok::Dot => "'.'",
            Tok::Pipe => "'|'",
            Tok::Eq => "'='",
            Tok::Ne => "'<>'",
            Tok::Lt => "'<'",
            Tok::Le => "'<='",
            Tok::Gt => "'>'",
            Tok::Ge => "'>='",
            Tok::Plus => "'+'",
            Tok::Minus => "'-'",
            Tok::Star => "'*'",
            Tok::Slash => "'/'",
            Tok::Percent => "'%'",
            Tok::Semi => "';'",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn err(&self, pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::new(pos, msg, Vec::new())
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.peek().map(|(_, c)| *c) != Some('/') {
                        return;
                    }
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn number(&mut self, start: Pos) -> Result<Tok, ParseError> {
        let mut text = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            text.push(c);
            self.bump();
        }
        let mut is_float = false;
        if self.peek() == Some('.') {
            let mut ahead = self.chars.clone();
            ahead.next();
            if ahead.peek().is_some_and(|(_, c)| c.is_ascii_digit()) {
                is_float = true;
                text.push('.');
                self.bump();
                while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                    text.push(c);
                    self.bump();
                }
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let mut ahead = self.chars.clone();
            ahead.next();
            let next = ahead.peek().map(|(_, c)| *c);
            let signed = matches!(next, Some('+' | '-'));
            if signed {
                ahead.next();
            }
            if ahead.peek().is_some_and(|(_, c)| c.is_ascii_digit()) {
                is_float = true;
                text.push('e');
                self.bump();
                if signed {
                    text.push(self.bump().unwrap());
                }
                while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                    text.push(c);
                    self.bump();
                }
            }
        }
        if self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            return Err(self.err(start, format!("malformed number starting {text}")));
        }
        if !is_float {
            return Ok(Tok::Int(text));
        }
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Tok::Float(x)),
            _ => Err(self.err(start, format!("float literal {text} out of range"))),
        }
    }

    fn string(&mut self, start: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(start, "unterminated string literal")),
                Some('\'') => return Ok(Tok::Str(s)),
                Some('\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('\\') => s.push('\\'),
                        Some('\'') => s.push('\''),
                        Some('"') => s.push('"'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('r') => s.push('\r'),
                        Some(c) => return Err(self.err(esc_pos, format!("unknown escape \\{c}"))),
                        None => return Err(self.err(start, "unterminated string literal")),
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn quoted_ident(&mut self, start: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(start, "unterminated quoted identifier")),
                Some('`') if self.peek() == Some('`') => {
                    self.bump();
                    s.push('`');
                }
                Some('`') if s.is_empty() => return Err(self.err(start, "empty quoted identifier")),
                Some('`') => return Ok(Tok::Quoted(s)),
                Some(c) => s.push(c),
            }
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut lx = Lexer {
        chars: src.char_indices().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let pos = lx.pos();
        let Some(c) = lx.peek() else {
            out.push(Spanned { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            c if c.is_ascii_digit() => lx.number(pos)?,
            c if c.is_alphabetic() || c == '_' => {
                let mut w = String::new();
                while let Some(c) = lx.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
                    w.push(c);
                    lx.bump();
                }
                Tok::Word(w)
            }
            '\'' => lx.string(pos)?,
            '`' => lx.quoted_ident(pos)?,
            _ => {
                lx.bump();
                let two = |lx: &mut Lexer, next: char, yes: Tok, no: Tok| {
                    if lx.peek() == Some(next) {
                        lx.bump();
                        yes
                    } else {
                        no
                    }
                };
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '|' => Tok::Pipe,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '%' => Tok::Percent,
                    ';' => Tok::Semi,
                    '>' => two(&mut lx, '=', Tok::Ge, Tok::Gt),
                    '<' => match lx.peek() {
                        Some('=') => {
                            lx.bump();
                            Tok::Le
                        }
                        Some('>') => {
                            lx.bump();
                            Tok::Ne
                        }
                        _ => Tok::Lt,
                    },
                    '!' if lx.peek() == Some('=') => {
                        lx.bump();
                        Tok::Ne
                    }
                    c => return Err(lx.err(pos, format!("unexpected character {c:?}"))),
                }
            }
        };
        out.push(Spanned { tok, pos });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("MATCH (n:Person {age: 4}) // hi\nRETURN n.x"),
            vec![
                Tok::Word("MATCH".into()),
                Tok::LParen,
                Tok::Word("n".into()),
                Tok::Colon,
                Tok::Word("Person".into()),
                Tok::LBrace,
                Tok::Word("age".into()),
                Tok::Colon,
                Tok::Int("4".into()),
                Tok::RBrace,
                Tok::RParen,
                Tok::Word("RETURN".into()),
                Tok::Word("n".into()),
                Tok::Dot,
                Tok::Word("x".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn operators_and_arrows() {
        assert_eq!(
            toks("<= >= <> != < > -> <-"),
            vec![
                Tok::Le,
                Tok::Ge,
                Tok::Ne,
                Tok::Ne,
                Tok::Lt,
                Tok::Gt,
                Tok::Minus,
                Tok::Gt,
                Tok::Lt,
                Tok::Minus,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn literals() {
        assert_eq!(toks("'a\\'b\\n'")[0], Tok::Str("a'b\n".into()));
        assert_eq!(toks("1.5e3")[0], Tok::Float(1500.0));
        assert_eq!(toks("3.x")[..2], [Tok::Int("3".into()), Tok::Dot]);
        assert_eq!(toks("`odd name`")[0], Tok::Quoted("odd name".into()));
        assert!(tokenize("'open").is_err());
        assert!(tokenize("1e999").is_err());
        assert!(tokenize("12ab").is_err());
        assert!(tokenize("#").is_err());
    }

    #[test]
    fn positions() {
        let t = tokenize("MATCH\n  (n)").unwrap();
        assert_eq!(t[1].pos, Pos { line: 2, col: 3 });
    }
}
