//! Tokenizer for session files.

use crate::error::{ErrorKind, ParseError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(String),
    /// One of `; , : = + - * / ^ ( )`.
    Sym(char),
    Arrow,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Int(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Byte offsets, used to glue hyphenated words such as `check-fi`.
    pub start: usize,
    pub end: usize,
}

/// Splits `src` into tokens. `#` starts a comment running to the end of the line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut line_start = 0;
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let pos = Pos { line, col: src[line_start..i].chars().count() + 1 };
        if c == '\n' {
            chars.next();
            line += 1;
            line_start = i + 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                chars.next();
            }
            continue;
        }
        let (tok, end) = if c.is_ascii_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            (Tok::Ident(src[i..end].to_string()), end)
        } else if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    end = j + 1;
                    chars.next();
                } else {
                    break;
                }
            }
            (Tok::Int(src[i..end].to_string()), end)
        } else if c == '-' && src[i + 1..].starts_with('>') {
            chars.next();
            chars.next();
            (Tok::Arrow, i + 2)
        } else if ";,:=+-*/^()".contains(c) {
            chars.next();
            (Tok::Sym(c), i + 1)
        } else {
            return Err(ParseError::new(ErrorKind::Syntax, pos, format!("unexpected character `{c}`")));
        };
        out.push(Token { tok, pos, start: i, end });
    }
    let pos = Pos { line, col: src[line_start..].chars().count() + 1 };
    out.push(Token { tok: Tok::Eof, pos, start: src.len(), end: src.len() });
    Ok(out)
}
