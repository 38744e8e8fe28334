//! Monte-Carlo laboratory for Gaussian universality of polynomial statistics.
//!
//! The crate is organised bottom-up:
//!
//! - [`datagen`]: samplers for every data model, Gaussian surrogates (plain and
//!   augmented), bootstrap resampling and the reproducible seed streams.
//! - [`statistics`]: U-, V- and tensor statistics, the lower-bound polynomial
//!   `p*_m`, the MMD estimator and Taylor plug-in components.
//! - [`hoeffding`]: conditional variances, Hoeffding projections, exact
//!   U-statistic variance formulas and dominance diagnostics.
//! - [`bounds`]: universality bound functionals with unspecified absolute
//!   constants set to one.
//! - [`empirics`]: the replication harness, two-sample Kolmogorov distances with
//!   DKW radii, and excess kurtosis.
//! - [`experiments`]: end-to-end studies that tie measured distances to the
//!   bound functionals and emit tidy tables.
//! - [`cli`]: configuration-driven entry point used by the `univ` binary.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --release --example
//! <name>` runs one.

pub mod bounds;
pub mod cli;
pub mod datagen;
pub mod empirics;
pub mod error;
pub mod experiments;
pub mod hoeffding;
pub mod statistics;

pub use datagen::{DataMatrix, ModelSpec, SeedStream};
pub use empirics::{KolmogorovEstimate, ReplicationSet};
pub use error::{Error, Result};
pub use statistics::{KernelSpec, StatisticSpec, SymmetricTensor};
