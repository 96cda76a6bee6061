//! Session language and driver for `nambu-core`: parse a session file,
//! run its commands and report verdicts, with an exact random-point oracle
//! as an independent check of the symbolic engine.

pub mod error;
pub mod expr;
pub mod lexer;
pub mod oracle;
pub mod parser;
pub mod report;
pub mod runner;
pub mod session;

pub use error::{ErrorKind, ParseError};
pub use parser::parse;
pub use report::{Report, Verdict};
pub use runner::{run, RunOptions};
pub use session::Session;
