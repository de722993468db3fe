//! Library behind the `bench` binary: experiment configuration, the
//! per-cell driver, report rendering and the model column sidecar.

pub mod columns;
pub mod config;
pub mod experiment;
pub mod report;
