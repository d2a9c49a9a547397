//! Experiment harness around `ccsbo-core`: configuration files, seeded
//! parallel trials, JSONL logs, reports and proxy IO.

pub mod config;
pub mod experiment;
pub mod problem;
pub mod report;
pub mod sim_io;
pub mod trial_log;

use std::path::PathBuf;

pub use config::{ConfigError, ExperimentConfig, RunSpec};
pub use experiment::{run_experiment, run_random_baseline, TrialOutput};
pub use problem::ProblemSpec;
pub use trial_log::TrialLog;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] ccsbo_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed log {path}: {message}")]
    BadLog { path: PathBuf, message: String },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
}
