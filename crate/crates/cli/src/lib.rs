//! Experiment harness for domain-invariant graph learning: configuration,
//! single runs, label-rate grids and parameter sweeps.

pub mod config;
pub mod grid;
pub mod pipeline;

pub use config::{ClassifierKind, ExperimentConfig, Profile, QpSolver, SyntheticConfig};
pub use grid::{run_grid, sensitivity_sweep, GridOutcome, SweepParameter};
pub use pipeline::{build_graph, load_task, prepare_task, run_cell, run_pipeline, ResultRecord, TaskData};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed on {shapes}: {source}")]
    Stage {
        stage: &'static str,
        shapes: String,
        #[source]
        source: dgl_core::DglError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
