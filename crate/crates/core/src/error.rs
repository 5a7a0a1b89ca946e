use std::io;

use thiserror::Error;

use crate::parser::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("{0}")]
    Parse(#[from] ParseError),

    /// A row or value violates a store invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("folder nesting would create a cycle through '{0}'")]
    Cycle(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("invalid path expression: {0}")]
    PathExpr(String),

    #[error("store format error: {0}")]
    Format(String),

    #[error("transitive closure refused: {nodes} nodes exceeds the closure node guard of {limit}")]
    ClosureGuard { nodes: usize, limit: usize },

    #[error("{0} is not implemented")]
    NotImplemented(&'static str),
}

impl Error {
    pub(crate) fn unknown(kind: &'static str, name: impl Into<String>) -> Self {
        Error::Unknown {
            kind,
            name: name.into(),
        }
    }
}
