//! Cascade-of-ensembles adaptive inference over precomputed model
//! predictions.
//!
//! A cascade is an ordered list of tiers, each an ensemble of models of
//! similar cost. An example starts at the cheapest tier; if enough of that
//! tier's models agree on a label it exits with that label, otherwise it is
//! deferred to the next tier. The final tier always answers.
//!
//! The crate runs such cascades over a [`dataset::PredictionTable`] and
//! accounts for what they cost: FLOPs, latency, hourly GPU spend and
//! simulated edge-to-cloud delay. Baselines (single-model confidence
//! cascades and the two-model oracle) and sweep/Pareto tooling sit alongside.
//!
//! ```
//! use coe::dataset::{generate_synthetic, SyntheticSpec};
//! use coe::engine::{run_cascade, CascadeSpec};
//!
//! let table = generate_synthetic(&SyntheticSpec {
//!     num_examples: 1000,
//!     label_space_size: 10,
//!     model_accuracies: vec![0.7, 0.72, 0.75, 0.9],
//!     correlation: 0.5,
//!     seed: 1,
//! })
//! .unwrap();
//! let spec = CascadeSpec::uniform(&[vec!["m1", "m2", "m3"], vec!["m4"]], 1.0);
//! let run = run_cascade(&table, &spec).unwrap();
//! assert_eq!(run.exit_fractions.len(), 2);
//! assert!((run.exit_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod cli;
pub mod costmodel;
pub mod dataset;
pub mod deferral;
pub mod engine;
pub mod error;

pub use error::{Error, Result};
