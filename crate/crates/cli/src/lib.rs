//! Experiment front end: configuration, runners and report artifacts for
//! the `admissibility-lab` binary.

pub mod config;
pub mod experiments;
pub mod report;
