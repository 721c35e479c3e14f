//! Pooled screening via compressed sensing and group testing.
//!
//! This crate simulates and decodes pooled tests at desk scale. Items carry a
//! rare binary attribute; instead of testing each item individually, items are
//! combined into overlapping pools described by a balanced binary pooling
//! matrix, a (possibly noisy) counting oracle reports how many flagged items
//! each pool contains, and a decoder recovers per-item verdicts from the pool
//! counts. The same machinery drives pooled outlier detection, where pool
//! counts come from anomaly scores of pool feature vectors instead of a
//! counting oracle.
//!
//! The `examples/` directory is the guided tour, one runnable program per
//! capability:
//!
//! - **`generate_matrix`** - balanced matrix construction and certification
//!   (disjunctness, coherence, RIP-1 expansion, cardinality/test-count bounds)
//! - **`noiseless_recovery`** - exact recovery of sparse labels from exact
//!   counts via COMP, branch-and-bound, and box-constrained LASSO
//! - **`noisy_decoding`** - decoder behavior under the tridiagonal counting
//!   noise model
//! - **`dorfman_screening`** - two-round testing, the square-root group-size
//!   rule, and its cost accounting
//! - **`grid_search`** - hyperparameter selection maximizing
//!   sensitivity x specificity on a validation population
//! - **`outlier_detection`** - mixture fitting, NLPD score histograms, and
//!   the pooled / two-round outlier-detection pipelines
//! - **`prevalence_sweep`** - the experiment harness and its deterministic
//!   CSV output
//! - **`cost_model`** - per-item cost curves across the prevalence sweep
//!
//! ```bash
//! cargo run --release --example noiseless_recovery
//! ```
//!
//! The same functionality is scriptable through the thin `poolscreen` binary
//! (`matrix gen`, `matrix check`, `decode`, `experiment`); see [`cli`].

pub mod cli;
pub mod cost;
pub mod decode;
pub mod error;
pub mod features;
pub mod gmm;
pub mod harness;
pub mod histogram;
pub mod matrix;
pub mod metrics;
pub mod od;
pub mod oracle;

pub use error::{Error, Result};
pub use matrix::PoolingMatrix;
pub use oracle::{ConfusionModel, CountVector, LabelVector, Population};
