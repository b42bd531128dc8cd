use std::fmt;

use thiserror::Error;

/// Errors raised by model construction, transformation and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("name collision: {0} already exists")]
    NameCollision(String),
    #[error("value {value} is not in the domain of {var}")]
    ValueOutOfDomain { var: String, value: String },
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("not solvable w.r.t. {{{}}}: {witness}", .subset.join(","))]
    NotSolvable { subset: Vec<String>, witness: String },
    #[error("not uniquely solvable w.r.t. {{{}}}: {witness}", .subset.join(","))]
    NotUniquelySolvable { subset: Vec<String>, witness: String },
    #[error("model has self-loops at {}", .0.join(","))]
    SelfLoops(Vec<String>),
    #[error("{what} exceeds the limit of {limit}")]
    BoundExceeded { what: String, limit: usize },
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("{0}")]
    Parse(ParseError),
    #[error("json: {0}")]
    Json(String),
}

/// A DSL error with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}:{}", self.message, self.line, self.col)
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
