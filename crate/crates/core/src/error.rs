use thiserror::Error;

use crate::term::QualifiedPath;

/// Syntax error in s-expression input, located by byte offset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column} (byte {offset}): {message}")]
pub struct ParseError {
    pub offset: usize,
    /// 1-based line of `offset`.
    pub line: usize,
    /// 1-based column, in characters.
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let before = &src[..offset.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Self { offset, line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("qualified path has no segments")]
    NoSegments,
    #[error("invalid path component `{0}`")]
    BadComponent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: inductive `{name}` declared twice")]
    DuplicateInductive { line: usize, name: QualifiedPath },
    #[error("unknown inductive `{0}`")]
    UnknownInductive(QualifiedPath),
    #[error("constructor index {index} out of range for `{inductive}` ({count} constructors)")]
    IndexOutOfRange { inductive: QualifiedPath, index: u32, count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnrichError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("malformed enrichment: {0}")]
    Malformed(String),
}

/// Failure reading one of the text formats (vocabulary, BPE model, manifest).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Enrich(#[from] EnrichError),
    #[error("term {ordinal}: {source}")]
    AtTerm {
        /// 1-based position of the failing term in the input stream.
        ordinal: usize,
        #[source]
        source: EnrichError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
