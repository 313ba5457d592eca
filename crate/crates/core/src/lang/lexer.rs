use std::fmt;

use super::ast::{Decimal, TimeUnit};
use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u128),
    Float(f64),
    Duration(Decimal, TimeUnit),
    Frequency(Decimal),
    Str(String),
    // keywords
    Input,
    Output,
    Trigger,
    Constant,
    Spawn,
    Close,
    Eval,
    When,
    With,
    And,
    Or,
    Not,
    True,
    False,
    If,
    Then,
    Else,
    // punctuation
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    Dot,
    At,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Int(v) => return write!(f, "integer `{v}`"),
            Tok::Float(v) => return write!(f, "number `{v:?}`"),
            Tok::Duration(d, u) => return write!(f, "duration `{d}{}`", u.suffix()),
            Tok::Frequency(d) => return write!(f, "frequency `{d}Hz`"),
            Tok::Str(_) => "string literal",
            Tok::Input => "`input`",
            Tok::Output => "`output`",
            Tok::Trigger => "`trigger`",
            Tok::Constant => "`constant`",
            Tok::Spawn => "`spawn`",
            Tok::Close => "`close`",
            Tok::Eval => "`eval`",
            Tok::When => "`when`",
            Tok::With => "`with`",
            Tok::And => "`and`",
            Tok::Or => "`or`",
            Tok::Not => "`not`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::If => "`if`",
            Tok::Then => "`then`",
            Tok::Else => "`else`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::Assign => "`:=`",
            Tok::Dot => "`.`",
            Tok::At => "`@`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::Le => "`<=`",
            Tok::Ge => "`>=`",
            Tok::EqEq => "`==`",
            Tok::Ne => "`!=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Percent => "`%`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "input" => Tok::Input,
        "output" => Tok::Output,
        "trigger" => Tok::Trigger,
        "constant" => Tok::Constant,
        "spawn" => Tok::Spawn,
        "close" => Tok::Close,
        "eval" => Tok::Eval,
        "when" => Tok::When,
        "with" => Tok::With,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "true" => Tok::True,
        "false" => Tok::False,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        _ => return None,
    })
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { chars: src.char_indices().peekable(), src, line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        // whitespace and `//` comments
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '/' && cur.peek2() == Some('/') {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, column) = (cur.line, cur.column);
        let err = |kind| ParseError { line, column, kind };
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, line, column });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = cur.offset();
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &src[start..cur.offset()];
            keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
        } else if c.is_ascii_digit() {
            lex_number(&mut cur).map_err(err)?
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => return Err(err(ParseErrorKind::UnterminatedString)),
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some(other) => return Err(err(ParseErrorKind::UnknownEscape(other))),
                        None => return Err(err(ParseErrorKind::UnterminatedString)),
                    },
                    Some(other) => s.push(other),
                }
            }
            Tok::Str(s)
        } else {
            cur.bump();
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '@' => Tok::At,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' | '×' => Tok::Star,
                '/' | '÷' => Tok::Slash,
                '%' => Tok::Percent,
                '∧' => Tok::And,
                '∨' => Tok::Or,
                '¬' => Tok::Not,
                '≠' => Tok::Ne,
                '≤' => Tok::Le,
                '≥' => Tok::Ge,
                ':' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Assign
                }
                ':' => Tok::Colon,
                '=' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::EqEq
                }
                '=' => Tok::EqEq,
                '!' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Ne
                }
                '<' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Le
                }
                '<' => Tok::Lt,
                '>' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::Ge
                }
                '>' => Tok::Gt,
                other => return Err(err(ParseErrorKind::UnknownCharacter(other))),
            }
        };
        out.push(Token { tok, line, column });
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<Tok, ParseErrorKind> {
    let start = cur.offset();
    let mut int_digits = String::new();
    while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
        int_digits.push(c);
        cur.bump();
    }
    let mut frac_digits = String::new();
    let mut has_point = false;
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        has_point = true;
        cur.bump();
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            frac_digits.push(c);
            cur.bump();
        }
    }
    let mut has_exp = false;
    if matches!(cur.peek(), Some('e' | 'E')) {
        let next = cur.peek2();
        let exp_follows = next.is_some_and(|c| c.is_ascii_digit())
            || (matches!(next, Some('+' | '-')) && {
                let mut it = cur.chars.clone();
                it.next();
                it.next();
                it.next().is_some_and(|(_, c)| c.is_ascii_digit())
            });
        if exp_follows {
            has_exp = true;
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    let text = cur.src[start..cur.offset()].to_string();
    // unit suffix
    let suffix_start = cur.offset();
    while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
        cur.bump();
    }
    let suffix = &cur.src[suffix_start..cur.offset()];
    if !suffix.is_empty() {
        if has_exp {
            return Err(ParseErrorKind::InvalidNumber(format!("{text}{suffix}")));
        }
        let mantissa: u128 = format!("{int_digits}{frac_digits}")
            .parse()
            .map_err(|_| ParseErrorKind::InvalidNumber(format!("{text}{suffix}")))?;
        let value = Decimal { mantissa, scale: frac_digits.len() as u32 };
        return match suffix {
            "ms" => Ok(Tok::Duration(value, TimeUnit::Millis)),
            "s" => Ok(Tok::Duration(value, TimeUnit::Seconds)),
            "min" => Ok(Tok::Duration(value, TimeUnit::Minutes)),
            "Hz" => Ok(Tok::Frequency(value)),
            _ => Err(ParseErrorKind::InvalidNumber(format!("{text}{suffix}"))),
        };
    }
    if has_point || has_exp {
        text.parse::<f64>()
            .ok()
            .filter(|f| f.is_finite())
            .map(Tok::Float)
            .ok_or(ParseErrorKind::InvalidNumber(text))
    } else {
        text.parse::<u128>().map(Tok::Int).map_err(|_| ParseErrorKind::InvalidNumber(text))
    }
}
