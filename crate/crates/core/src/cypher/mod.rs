//! Temporal Cypher subset: lexer, syntax tree and parser.

pub mod ast;
pub mod lexer;
pub mod parser;

use std::fmt;

pub use ast::{render, Statement};
pub use lexer::Pos;
pub use parser::parse;

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>, mut expected: Vec<String>) -> Self {
        expected.sort();
        expected.dedup();
        ParseError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
            expected,
        }
    }

    /// The offending source line with a caret under the error column.
    pub fn caret(&self, src: &str) -> String {
        let line = src.lines().nth(self.line.saturating_sub(1)).unwrap_or("");
        format!("{line}\n{}^", " ".repeat(self.col.saturating_sub(1)))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}
