//! Scenario configuration, built-in scenarios and the end-to-end pipeline.

pub mod config;
pub mod pipeline;
pub mod scenarios;

pub use config::{ScenarioConfig, SCHEMA_VERSION};
pub use pipeline::{classify_error, run_pipeline, OutcomeClass, RunArtifacts, RunReport, Stage};
pub use scenarios::{builtin_scenarios, find_scenario, Preset};
