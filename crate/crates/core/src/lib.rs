//! Performance evaluation of multi-cell pinching-antenna networks.
//!
//! Two independent engines share one parameter model:
//!
//! * [`analysis`] evaluates outage probability, its bounds and the ergodic
//!   rate from the Laplace transform of the aggregate interference;
//! * [`montecarlo`] simulates the clustered point process link by link.
//!
//! Agreement between the two is the main correctness check of either.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod numerics;
pub mod params;

pub use analysis::{AnalysisConfig, InterferenceField, OutageAnalyzer, OutageInputs};
pub use channel::{LinkBudget, LinkSample, LinkState};
pub use error::{Error, Result};
pub use geometry::{NetworkRealization, Point2};
pub use montecarlo::{EstimateReport, RealizationOutcome, SimConfig, Simulator};
pub use params::SystemParams;

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
