//! Experiment runner for the census simulator: scenario catalog, seeded
//! parallel execution, CSV outputs and reproducible run manifests.

pub mod output;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod theory;

use std::path::PathBuf;

use census_core::aggregation::AggregateError;
use census_core::analysis::AnalysisError;
use census_core::metrics::MetricsError;
use census_core::protocol::ProtocolError;
use census_core::sim::SimError;
use census_core::trial::TrialError;
use thiserror::Error;

pub use output::{RunManifest, TrialRow, COLUMN_VERSION};
pub use runner::{execute, run_scenario, TrialRecord};
pub use scenario::{builtin, MobilityKind, Scenario, ScenarioFile, SpeedRange, TokenRule, TrialSpec, BUILTINS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("trial {index}: {source}")]
    Trial { index: usize, source: TrialError },
    #[error(transparent)]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl From<TrialError> for HarnessError {
    fn from(source: TrialError) -> Self {
        HarnessError::Trial { index: usize::MAX, source }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
