//! Experiment configuration, seeded Monte Carlo sweeps, result export and
//! the command-line front end.

mod cli;
pub mod config;
pub mod export;
pub mod seed;
pub mod selftest;
pub mod sweep;

pub use cli::cli_main;
pub use config::{EstimatorKind, ExperimentConfig};
pub use export::{export_angular_map, AngularMap};
pub use sweep::{run_sweep, run_trial, SweepResult, SweepRow, TrialRecord};
