//! Information-theoretic selection and aggregation of binary predictive
//! distributions from several predictors.
//!
//! The pipeline: [`record`] ingests predictions, [`selfcons`] and [`sll`]
//! turn raw outputs or likelihoods into distributions, [`select`] picks and
//! aggregates a low-disagreement subset, [`baselines`] provides naive
//! fusion, [`metrics`] scores the result, and [`harness`] drives runs,
//! sweeps and reports. [`synth`] generates labeled data with complementary
//! predictors.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod infotheory;
pub mod metrics;
pub mod record;
pub mod select;
pub mod selfcons;
pub mod sll;
pub mod synth;

pub use error::{Error, Result};
pub use record::{BinaryDist, BinaryLabel, PredictionPool, PredictionRecord, SelectionResult};
pub use select::{muse_conservative, muse_greedy, Aggregation, MuseParams};
