//! Command-line harness around `polymer-core`: run configuration, experiment
//! dispatch and report encoding.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, Format, LabError, LabResult, Overrides, RunConfig};
pub use experiments::run_experiment;
pub use report::{emit_report, Check, ExperimentReport};
