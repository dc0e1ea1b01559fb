//! Textual schema language for real-time classes (`.rtdb` files).
//!
//! ```text
//! realtime class Aircraft slots 8 {
//!     key Identifier: string;
//!     sensor Speed: rtinteger { vd = 6s; mde = 2; }
//!     derived Lane: rtinteger { vd = 4s; from Location, Altitude; }
//!     periodic UpdateSpeed updates Speed period 6s deadline 1s;
//!     sporadic ComputeLane computes Lane deadline 500ms;
//!     aperiodic GetSpeed reads Speed deadline 1s;
//! }
//! ```
//!
//! Parsing stops at the first error. Semantic rules live in
//! [`crate::schema::validate`].

mod format;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::schema::{Schema, Site};

pub use format::format_schema;
pub use parser::{parse, parse_with_map};

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourcePos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub pos: SourcePos,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(pos: SourcePos, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Self {
            pos,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassPositions {
    pub pos: SourcePos,
    pub attrs: Vec<SourcePos>,
    pub methods: Vec<SourcePos>,
}

impl Default for SourcePos {
    fn default() -> Self {
        SourcePos { line: 1, column: 1 }
    }
}

/// Where each class, attribute and method was declared.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceMap {
    pub classes: Vec<ClassPositions>,
}

impl SourceMap {
    pub fn locate(&self, site: Site) -> Option<SourcePos> {
        match site {
            Site::Class(c) => self.classes.get(c).map(|c| c.pos),
            Site::Attr(c, i) => self.classes.get(c)?.attrs.get(i).copied(),
            Site::Method(c, i) => self.classes.get(c)?.methods.get(i).copied(),
        }
    }
}

/// Parses and checks in one go; useful where only a usable schema matters.
pub fn parse_validated(src: &str) -> Result<Schema, String> {
    let schema = parse(src).map_err(|e| e.to_string())?;
    let diags = crate::schema::validate(&schema);
    if crate::schema::has_errors(&diags) {
        let msgs: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(msgs.join("\n"));
    }
    Ok(schema)
}
