//! Experiment driver for `logsense-core`.
//!
//! * [`config`]: the JSON experiment document and its validation;
//! * [`study`]: single runs, ε-ladders and refinement studies;
//! * [`oracle_suite`]: randomized drivers around the analytic oracles;
//! * [`experiment`]: mode dispatch, artifacts and the run manifest.

pub mod config;
pub mod experiment;
pub mod manifest;
pub mod oracle_suite;
pub mod study;

pub use config::{ConfigError, ExperimentConfig, Mode};
pub use experiment::{resolve_out_dir, run_experiment, OUT_ENV};
pub use manifest::Manifest;
