//! Config-driven experiment runner and report export.

mod config;
mod report;
mod run;

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind, GridConfig, Overrides, Params};
pub use report::{Check, Relation, Report, StageRecord, Table};
pub use run::run_experiment;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("stage `{stage}` failed: {message}")]
    StageFailed { stage: String, message: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn invalid(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::ConfigInvalid {
        path: path.to_string(),
        message: message.into(),
    }
}
