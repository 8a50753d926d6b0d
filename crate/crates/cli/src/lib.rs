//! Configuration, ensemble orchestration and data emission for the
//! `adaptive-fermions` command-line tool.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{CollapseConfig, ExperimentConfig, Mode, SweepConfig};
pub use runner::{
    collapse_curves, oracle_check, run_collapse, run_ensemble, run_sweep, score_collapse,
    CollapseReport, Ensemble, ProfileSummary, SweepRow,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] adaptive_fermions::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
