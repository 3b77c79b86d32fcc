//! Multi-seed experiment execution, resumable record persistence and
//! report emission.

mod config;
pub mod hparams;
mod protocol;
mod report;

use thiserror::Error;

use crate::data_io::DataError;
use crate::metrics::MetricsError;

pub use config::{model_key, DatasetSource, ExperimentConfig, HparamOverrides, ModelObjective, ModelSpec, ResolvedModel};
pub use protocol::{load_experiment_dataset, run_protocol, scan_records, RunSummary, SeedFailure, THREADS_ENV};
pub use report::{report, ReportFiles};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: malformed record on line {line} followed by further records")]
    CorruptRecords { path: String, line: usize },
    #[error("model {model}, seed {seed}, stage {stage}: {message}")]
    Stage {
        model: String,
        seed: u64,
        stage: &'static str,
        message: String,
    },
}

impl RunnerError {
    /// 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) | RunnerError::Data(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunnerError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    }
}
