use thiserror::Error;

use crate::lexer::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    UnknownName,
    Degree,
    Chart,
}

impl std::fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorKind::Syntax => "SyntaxError",
            ErrorKind::UnknownName => "UnknownName",
            ErrorKind::Degree => "DegreeError",
            ErrorKind::Chart => "ChartError",
        })
    }
}

/// A parse or name-resolution failure at a source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ErrorKind, pos: Pos, message: impl Into<String>) -> Self {
        ParseError { kind, pos, message: message.into() }
    }
}

/// An expression that failed to evaluate; positioned by the caller.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind}: {message}")]
pub struct EvalError {
    pub kind: ErrorKind,
    pub message: String,
    /// The offending identifier, when there is one.
    pub name: Option<String>,
}

impl EvalError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        EvalError { kind, message: message.into(), name: None }
    }

    pub fn at(self, pos: Pos) -> ParseError {
        ParseError { kind: self.kind, pos, message: self.message }
    }
}
