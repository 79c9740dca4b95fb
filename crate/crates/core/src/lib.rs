//! Off-policy evaluation by classification.
//!
//! Ranks Q-functions using only logged episodes: OPC and SoftOPC treat
//! successful-episode Q-values as positives and score how well the Q-values
//! separate them, alongside TD, advantage-sum and Monte-Carlo baselines.
//! The `env` and `harness` modules provide binary-tree experiments with
//! exact returns for correlating each score with true policy quality.

pub mod env;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use metrics::{MetricName, MetricOptions, MetricScore, Orientation, PriorConfig};
pub use types::{annotate, ActionId, Dataset, Episode, Policy, QAnnotation, QTable, StateId, Transition};
