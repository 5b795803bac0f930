//! Experiment harness for the charvar laboratory: configuration,
//! deterministic parallel sampling, verification suites, reports, and
//! plots.

pub mod config;
pub mod plots;
pub mod report;
pub mod run;
pub mod stats;
pub mod verify;
