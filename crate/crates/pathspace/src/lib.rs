//! Experiment runner for `pathspace-core`.
//!
//! Every registered experiment reproduces one acceptance property of the
//! library as a set of pass/fail [`report::Check`] rows. The runner resolves
//! a configuration, evaluates the experiment on a thread pool whose results
//! are folded in path order, applies the three-seed policy to statistical
//! checks and writes `report.json` and `data.csv`.

pub mod config;
pub mod experiments;
pub mod parallel;
pub mod report;
pub mod runner;
pub mod stats;

pub use config::{ConfigError, ConfigFile, ExperimentConfig};
pub use experiments::{find, registry, Experiment};
pub use report::{Check, CheckKind, DataTable, StatReport};
pub use runner::{execute, run_named, write_outputs, RunError, RunOutput};
