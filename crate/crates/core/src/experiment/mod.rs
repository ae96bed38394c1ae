//! Experiment orchestration: configuration, runs, property suites and
//! file exports.

pub mod config;
pub mod export;
pub mod runs;
pub mod suites;

pub use config::{BeamParams, ExperimentConfig, ExperimentKind, Overrides, StateSpec, CONFIG_SCHEMA};
pub use runs::{run, run_example1, run_example2, RunOutcome, RunSummary};
pub use suites::{run_frequency_suite, run_property_suites, FaultInjection, SuiteReport};
