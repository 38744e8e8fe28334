//! Distribution-level measurements: the replication harness, empirical CDFs,
//! Kolmogorov distances with DKW radii, and excess kurtosis.

mod distance;
mod replication;

pub use distance::{
    dkw_radius, ecdf_eval, excess_kurtosis, kolmogorov_distance, ks_distance, ks_one_sample, KolmogorovEstimate,
    Kurtosis, DEFAULT_ALPHA,
};
pub(crate) use distance::kolmogorov_from_values;
pub use replication::{replicate, replicate_with, with_threads, ReplicationMeta, ReplicationSet, Stage};
