//! Experiment driver behind the `pinchnet` binary: configuration loading and
//! validation, mode execution over sweeps, and CSV/JSON reporting.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

pub use config::{load_config, load_config_with, ConfigError, ExperimentConfig, Mode, Sweep};
pub use runner::{run, write_outputs, ResultRow, RunOutput};
