use std::fmt;

use thiserror::Error;

/// A syntax error in one of the embedded languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into `source`.
    pub position: usize,
    pub message: String,
    pub source: String,
}

impl ParseError {
    pub fn new(position: usize, message: impl Into<String>, source: &str) -> Self {
        Self {
            position,
            message: message.into(),
            source: source.to_string(),
        }
    }

    /// 1-based column of the error (character count, not bytes).
    pub fn column(&self) -> usize {
        let end = self.position.min(self.source.len());
        self.source[..end].chars().count() + 1
    }

    /// The text starting at the error position, truncated for display.
    pub fn near(&self) -> String {
        let start = self.position.min(self.source.len());
        let rest: String = self.source[start..].chars().take(24).collect();
        if rest.is_empty() {
            "<end of input>".to_string()
        } else {
            rest
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at column {} near `{}` in `{}`",
            self.message,
            self.column(),
            self.near(),
            self.source
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(ParseError),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic produced a non-finite number ({0})")]
    NonFinite(String),
    #[error("function `{function}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("argument {arg} outside table range [{min}, {max}] of `{function}`")]
    TableDomain {
        function: String,
        arg: f64,
        min: f64,
        max: f64,
    },
    #[error("function `{0}` is defined recursively")]
    RecursiveFunction(String),
    #[error("parallel branches wrote conflicting values to `{attribute}`: {values}")]
    ParallelWriteConflict { attribute: String, values: String },
    #[error("loop guard still true after {cap} iterations")]
    IterationLimitExceeded { cap: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("pattern `{pattern}` refines unknown pattern `{target}`")]
    BadRefinesTarget { pattern: String, target: String },
    #[error("path {0:?} does not address a suitable node")]
    BadPath(Vec<usize>),
    #[error("pattern `{atom}` does not declare refines = `{target}`")]
    RefinementMismatch { atom: String, target: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("{context}: {source}")]
    InContext {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{}", join_problems(.0))]
    Invalid(Vec<Error>),
}

fn join_problems(problems: &[Error]) -> String {
    let lines: Vec<String> = problems.iter().map(|p| p.to_string()).collect();
    format!("{} problem(s):\n  {}", problems.len(), lines.join("\n  "))
}

impl Error {
    /// Stable machine-readable code used by the CLI and the HTTP API.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "PARSE_ERROR",
            Error::UnknownAttribute(_) => "UNKNOWN_ATTRIBUTE",
            Error::UnknownFunction(_) => "UNKNOWN_FUNCTION",
            Error::UnknownPattern(_) => "UNKNOWN_PATTERN",
            Error::TypeMismatch(_) => "TYPE_MISMATCH",
            Error::DivisionByZero => "DIVISION_BY_ZERO",
            Error::NonFinite(_) => "NON_FINITE",
            Error::ArityMismatch { .. } => "ARITY_MISMATCH",
            Error::TableDomain { .. } => "TABLE_DOMAIN",
            Error::RecursiveFunction(_) => "RECURSIVE_FUNCTION",
            Error::ParallelWriteConflict { .. } => "PARALLEL_CONFLICT",
            Error::IterationLimitExceeded { .. } => "ITERATION_LIMIT",
            Error::DuplicateId(_) => "DUPLICATE_ID",
            Error::BadRefinesTarget { .. } => "BAD_REFINES_TARGET",
            Error::BadPath(_) => "BAD_PATH",
            Error::RefinementMismatch { .. } => "REFINEMENT_MISMATCH",
            Error::InvalidSchema(_) => "INVALID_SCHEMA",
            Error::InvalidDocument(_) => "INVALID_DOCUMENT",
            Error::InContext { source, .. } => source.code(),
            Error::Invalid(problems) => problems.first().map_or("INVALID_DOCUMENT", Error::code),
        }
    }

    /// Strips context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InContext { source, .. } => source.root(),
            other => other,
        }
    }

    /// Every leaf problem, flattening aggregates and context wrappers.
    pub fn problems(&self) -> Vec<&Error> {
        match self {
            Error::Invalid(all) => all.iter().flat_map(Error::problems).collect(),
            Error::InContext { source, .. } => match source.as_ref() {
                Error::Invalid(_) => source.problems(),
                _ => vec![self],
            },
            other => vec![other],
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::InContext {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Collapses a list of problems: none is `Ok`, one is returned as-is.
    pub fn collect(mut problems: Vec<Error>) -> Result<()> {
        match problems.len() {
            0 => Ok(()),
            1 => Err(problems.remove(0)),
            _ => Err(Error::Invalid(problems)),
        }
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
