//! BPMN text: the compact XML-like notation agents read and write.
//!
//! ```text
//! <process name="delivery">
//!   <activity role="customer" action="prepare to send a package" id="a1"/>
//!   <exclusiveGateway id="g1">
//!     <branch condition="home pickup">
//!       <activity role="system" action="assign a courier for pickup" id="a2"/>
//!     </branch>
//!     <branch condition="self-service">
//!       <activity role="customer" action="go to the mailing point to send" id="a3"/>
//!     </branch>
//!   </exclusiveGateway>
//! </process>
//! ```
//!
//! [`parse`] is strict: unknown tags and attributes are errors. Use
//! [`parse_document`] with [`ParseOptions::lenient`] to downgrade them to
//! warnings when ingesting model output mid-pipeline.

mod extract;
mod lexer;
mod parser;
mod writer;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use extract::{extract_model_block, NotFound};
pub use parser::parse_document;
pub use writer::{serialize, write_text, SerializeError};

use crate::model::ProcessModel;

/// File extension for BPMN text.
pub const EXTENSION: &str = "bpmt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Position {
    /// 1-based line.
    pub line: u32,
    /// 1-based column, counted in characters.
    pub column: u32,
    /// Byte offset into the input.
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: Position,
    pub end: Position,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.line, self.start.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseErrorKind {
    UnexpectedTag,
    UnclosedTag,
    UnknownAttribute,
    MissingAttribute,
    BadNesting,
    NotWellFormed,
}

impl ParseErrorKind {
    /// Stable machine-readable code.
    pub fn code(self) -> &'static str {
        match self {
            Self::UnexpectedTag => "unexpected-tag",
            Self::UnclosedTag => "unclosed-tag",
            Self::UnknownAttribute => "unknown-attribute",
            Self::MissingAttribute => "missing-attribute",
            Self::BadNesting => "bad-nesting",
            Self::NotWellFormed => "not-well-formed",
        }
    }
}

/// What the parser flagged beyond the error kind. Lets the validator map
/// errors onto constraint rules without string matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "detail", rename_all = "kebab-case")]
pub enum ParseDetail {
    None,
    /// An element name outside the grammar.
    UnknownTag { tag: String },
    /// A `<branch>` outside any gateway.
    BranchOutsideGateway,
    /// A required attribute was absent.
    Missing { element: String, attribute: String },
    /// Attribute not defined for the element.
    Unknown { element: String, attribute: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
    pub detail: ParseDetail,
    /// Tree path of the enclosing element, when known.
    pub path: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind.code(), self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Report unknown tags and attributes as warnings instead of errors.
    pub lenient: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        Self { lenient: false }
    }

    pub fn lenient() -> Self {
        Self { lenient: true }
    }
}

/// Everything one parser pass learned about a document.
#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    /// Present whenever a `<process>` element was found and `errors` is empty.
    pub model: Option<ProcessModel>,
    pub errors: Vec<ParseError>,
    pub warnings: Vec<ParseError>,
    /// Start-tag span of every node and branch, keyed by tree path.
    pub spans: BTreeMap<String, SourceSpan>,
}

impl ParseOutcome {
    pub fn into_result(self) -> Result<ProcessModel, Vec<ParseError>> {
        match self.model {
            Some(m) if self.errors.is_empty() => Ok(m),
            _ => Err(self.errors),
        }
    }
}

/// Strict parse of BPMN text.
pub fn parse(text: &str) -> Result<ProcessModel, Vec<ParseError>> {
    parse_document(text, ParseOptions::strict()).into_result()
}

/// Lenient parse: unknown tags and attributes are skipped.
pub fn parse_lenient(text: &str) -> Result<ProcessModel, Vec<ParseError>> {
    parse_document(text, ParseOptions::lenient()).into_result()
}
