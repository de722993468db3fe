//! Target-statistics categorical encoders with leakage-safe fit/transform,
//! a small second-order gradient-boosted-trees learner, imbalanced-data
//! evaluation metrics, and a deterministic synthetic data generator.

pub mod data;
pub mod encoders;
pub mod error;
pub mod gbdt;
pub mod metrics;
pub mod synth;
pub mod textfmt;

pub use error::{Error, Result};
