//! Textual frontend for `.skel` programs: parsing, validation against the
//! model constraints, and pretty-printing.
//!
//! The grammar, in outline:
//!
//! ```text
//! program <id>
//! shared <id> : { <int>, ... } init <int> ;
//! process <id> {
//!   props <id> ... ;
//!   state <id> { <id> ... } [ts ( <int>, ... )] ;
//!   arc <id> -> <id> [when <guard>] [do <assign> || ...] ;
//!   arc <id> -> <id> sync with <id> { alt [<guard>] [do ...] ; ... } ... ;
//! }
//! init ( <id> ... [; <id>=<int>, ...] ) ;
//! ```
//!
//! Guards use `&`, `|`, `!`, `=`, `!=`, `<`, `<=` with the usual
//! precedence; `when true` and `do skip` may be elided. `//` starts a line
//! comment. Compiled programs additionally carry `ts (...)` tuples on
//! states and per-neighbor `sync with` blocks on arcs, whose `alt` lines
//! are the exclusive alternatives.

mod lexer;
mod parser;
mod printer;
mod validate;

use std::fmt;

use crate::model::Program;

pub use printer::print_program;

/// A unit of source text plus where it came from (file path or an inline
/// tag), used for diagnostic prefixes.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub text: String,
    pub origin: String,
}

impl SourceUnit {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceUnit {
            text: text.into(),
            origin: origin.into(),
        }
    }

    pub fn inline(text: impl Into<String>) -> Self {
        Self::new(text, "<inline>")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// Stable diagnostic codes. Errors prevent all downstream stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    SyntaxError,
    DuplicateProposition,
    DuplicateState,
    DuplicateVariable,
    DuplicateProcess,
    IndistinctLocalStates,
    SelfLoop,
    DeadEndState,
    UndeclaredSymbol,
    ConflictingWrites,
    BadInitialState,
    BadDomain,
    BadTimestampTuple,
    BadSyncBlock,
    PairwiseClause1,
    PairwiseClause2,
    PairwiseClause3,
    PairwiseClause4,
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Line/column position, one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub loc: Loc,
    pub origin: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(origin: &str, loc: Loc, code: Code, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            loc,
            origin: origin.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}[{}]: {}",
            self.origin, self.loc.line, self.loc.col, self.severity, self.code, self.message
        )
    }
}

/// Parses and validates a program. On success the result satisfies every
/// model constraint: disjoint proposition sets, distinct local-state
/// valuations, no self-loops, no dead ends, conflict-free actions, and
/// well-formed initial states.
pub fn parse_program(src: &SourceUnit) -> Result<Program, Vec<Diagnostic>> {
    let tokens = lexer::lex(src).map_err(|d| vec![d])?;
    let raw = parser::parse(src, &tokens).map_err(|d| vec![d])?;
    validate::resolve_and_validate(src, raw)
}
