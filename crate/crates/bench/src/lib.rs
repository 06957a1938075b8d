//! Benchmark harness for Newton-MR: baseline solvers, solver-by-problem
//! grids with shared oracle accounting, CSV records and performance
//! profiles.

pub mod baselines;
pub mod config;
pub mod grid;
pub mod profile;
pub mod protocol;
pub mod record;
pub mod registry;

use newton_mr_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("{0}")]
    Parse(String),
    #[error("non-finite objective or gradient")]
    NonFinite,
}

pub use grid::{run_grid, run_grid_detailed, Solver};
pub use profile::{performance_profile, Metric, ProfileCurve};
pub use protocol::Protocol;
pub use record::{RunRecord, RunStatus};
