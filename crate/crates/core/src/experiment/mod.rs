//! End-to-end experiments: training, attack and benchmark drivers.
//!
//! An experiment is described by a TOML file ([`ExperimentConfig`]) and
//! produces a JSON [`RunReport`]. Everything in a report except its
//! `timing` section is a pure function of the config.

mod attack;
mod bench;
mod config;
mod report;
mod train;

pub use attack::{attack_report, run_attack, AttackOptions};
pub use bench::{run_bench, BenchRow, BenchTable};
pub use config::{DatasetConfig, DpSettings, ExperimentConfig, ModelConfig, OptimizerKind};
pub use report::{AttackSection, PrivacySection, RunReport, Timing};
pub use train::{experiment_data, run_training, run_training_with, RunOptions};
