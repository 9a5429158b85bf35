//! Seeded experiment runner: trains agents on environments, writes one CSV
//! per run plus summaries, and computes the comparison metrics.

pub mod config;
pub mod learn;
pub mod metrics;
pub mod registry;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use metrics::EpisodeMetrics;
pub use registry::{AgentKind, AGENTS};
pub use run::{run_experiment, run_shaping, train_run, ExperimentResult, RunOutcome, Shields};

use crate::agents::CheckpointError;
use crate::envs::EnvError;
use crate::learner::LearnerError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("rules: {0}")]
    Rules(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
