//! Exhaustive search over bounded feedforward MLP architectures for
//! next-day return prediction, and the statistics used to explain which
//! architecture features drive predictive error.
//!
//! The crate is organized bottom-up:
//!
//! - [`archspace`]: enumeration of hidden-layer width sequences and their
//!   five structural features (layer count, neuron count, mean and spread
//!   of widths, inflection count).
//! - [`mlp`]: a small sigmoid MLP with full-batch backpropagation.
//! - [`data`]: price series ingestion, lagged-return features, date
//!   alignment, train/test split and standardization, plus a seeded
//!   synthetic market generator.
//! - [`sweep`]: trains every enumerated architecture in parallel with
//!   deterministic, label-derived seeds, then ranks the results.
//! - [`stats`]: binomial proportion tests, z-tests, Pearson correlation
//!   and OLS regression.
//! - [`analysis`]: the population-vs-top-M analysis pipeline built on the
//!   modules above, with its CSV/JSON serializations.

pub mod analysis;
pub mod archspace;
pub mod data;
pub mod mlp;
pub mod rng;
pub mod stats;
pub mod sweep;

pub use archspace::{ArchFeatures, ArchSpec, SpaceBounds};
pub use data::{Dataset, PriceSeries, Sample};
pub use mlp::{EvalMetrics, Network, TrainConfig};
pub use sweep::{RankedReport, SweepConfig, SweepRecord};
