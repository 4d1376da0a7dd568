//! Scenario files, batch runs, report files and clip export on top of
//! `occauth-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod export;
pub mod runner;

pub use config::{AttackSpec, ConfigError, ExportSpec, ScenarioConfig};
pub use export::export_dataset;
pub use runner::{run_scenario, MetricsReport, RunError, Summary, TrialRow};
