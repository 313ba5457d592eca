//! The specification language: tokenizer, recursive-descent parser and
//! pretty-printer.
//!
//! A specification is a sequence of declarations introduced by the keywords
//! `constant`, `input`, `output` and `trigger`. Line breaks carry no meaning;
//! a declaration ends where the next keyword begins.
//!
//! ```
//! let ast = rtmon::lang::parse(
//!     "input altitude: Float
//!      output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
//!      trigger average_alt > 300.0",
//! )?;
//! assert_eq!((ast.inputs.len(), ast.outputs.len(), ast.triggers.len()), (1, 1, 1));
//! # Ok::<(), rtmon::lang::ParseError>(())
//! ```

pub mod ast;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::SpecificationAst;
pub use pretty::{pretty_print, print_expression};

/// Parses specification source into an AST.
pub fn parse(source: &str) -> Result<SpecificationAst, ParseError> {
    let tokens = lexer::tokenize(source)?;
    parser::Parser::new(tokens).specification()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownCharacter(char),
    UnterminatedString,
    UnknownEscape(char),
    InvalidNumber(String),
    Unexpected { found: String, expected: Vec<String> },
    Invalid(String),
    DuplicateDeclaration(String),
}

impl ParseErrorKind {
    pub fn is_lexical(&self) -> bool {
        matches!(
            self,
            ParseErrorKind::UnknownCharacter(_)
                | ParseErrorKind::UnterminatedString
                | ParseErrorKind::UnknownEscape(_)
                | ParseErrorKind::InvalidNumber(_)
        )
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnknownCharacter(c) => write!(f, "unknown character `{c}`"),
            ParseErrorKind::UnterminatedString => f.write_str("unterminated string literal"),
            ParseErrorKind::UnknownEscape(c) => write!(f, "unknown escape `\\{c}`"),
            ParseErrorKind::InvalidNumber(t) => write!(f, "invalid numeric literal `{t}`"),
            ParseErrorKind::Unexpected { found, expected } => {
                write!(f, "unexpected {found}, expected ")?;
                match expected.as_slice() {
                    [] => f.write_str("something else"),
                    [one] => f.write_str(one),
                    many => write!(f, "one of {}", many.join(", ")),
                }
            }
            ParseErrorKind::Invalid(msg) => f.write_str(msg),
            ParseErrorKind::DuplicateDeclaration(name) => write!(f, "`{name}` is declared more than once"),
        }
    }
}
