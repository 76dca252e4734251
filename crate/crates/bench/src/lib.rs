//! Experiment grids over the `rspg-core` solvers: configuration, seeded execution,
//! reports, summary tables, theoretical bounds and self-checks.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod summary;
pub mod verify;

pub use cli::cli_main;
pub use config::{Algorithm, ExperimentConfig, PostSampleRule, PostSamples, Scenario};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, with_threads, RunOptions};
pub use report::{ExperimentReport, ReplicationRow};
pub use summary::{summarize, SummaryTable};
