//! Config loading, experiment dispatch and result emission for the CLI.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{db_to_linear, dbm_to_watts, Algorithm, ExperimentConfig, RunConfig, SweepVar};
pub use experiment::{default_grid, evaluate_point, run_experiment, Command, PointResult, ResultRow, ResultSet};
pub use output::{emit_results, render, Format};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl HarnessError {
    /// Process exit status: 2 usage or config, 3 I/O, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Model(E::InvalidArgument(_) | E::InfeasibleCatalog(_) | E::Oversize(_)) => 2,
            HarnessError::Model(_) => 4,
        }
    }
}
