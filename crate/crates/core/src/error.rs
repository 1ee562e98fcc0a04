use thiserror::Error;

use crate::analysis::ExperimentStats;
use crate::censor::CensorViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("censor violation: {0}")]
    CensorViolation(Box<CensorViolation>),

    #[error("experiment aborted at run {run_index} after {completed} completed runs: {violation}", completed = partial.n_runs())]
    ExperimentAborted {
        run_index: u64,
        violation: Box<CensorViolation>,
        partial: Box<ExperimentStats>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown strategy {id:?}; available: {}", available.join(", "))]
    UnknownStrategy { id: String, available: Vec<String> },

    #[error("malformed strategy {id:?}: {reason}")]
    MalformedStrategy { id: String, reason: String },

    #[error("replay of run {run_index} diverged from its record: {detail}")]
    ReplayMismatch { run_index: u64, detail: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
