// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors surfaced by every stage of the co-optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed netlist: {0}")]
    MalformedNetlist(String),
    #[error("library mismatch: {0}")]
    LibraryMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("invalid normalization: {0}")]
    InvalidNormalization(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedNetlist(msg.into())
}
