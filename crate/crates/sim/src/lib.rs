//! Experiment engine for non-binary LDPC reconciliation: FER sweeps,
//! efficiency thresholds, parameter studies and figure reproduction.

// Negated comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod engine;
pub mod reproduce;
pub mod stats;
pub mod table;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    ConfigFile(#[from] config::ConfigError),
    #[error("worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Field(#[from] nbrecon::gf::FieldError),
    #[error(transparent)]
    Code(#[from] nbrecon::ldpc::CodeError),
    #[error(transparent)]
    CodeFile(#[from] nbrecon::ldpc::ParseError),
    #[error(transparent)]
    Quantizer(#[from] nbrecon::quantizer::QuantizerError),
    #[error(transparent)]
    Source(#[from] nbrecon::source::SourceError),
    #[error(transparent)]
    Protocol(#[from] nbrecon::protocol::ProtocolError),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl SimError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}
