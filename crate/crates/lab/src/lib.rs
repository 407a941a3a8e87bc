//! Experiment runner for the `poa-core` analytics and simulator.
//!
//! An experiment is a JSON document naming one of four kinds (`gap-sweep`,
//! `throughput-vs-ratio`, `interarrival-hist`, `pow-vs-poa`). Running it
//! writes plot-ready CSV tables and a `manifest.json` that echoes the fully
//! resolved spec, marking every defaulted field.

pub mod config;
pub mod error;
pub mod experiment;
pub mod format;

pub use config::{validate_spec, Diagnostic, ExperimentKind, ExperimentSpec, NetworkSpec, Overrides, RatioGrid, Spacing};
pub use error::LabError;
pub use experiment::{run_experiment, RunSummary, AGGREGATE_ABOVE};
