//! Samplers for the data-generating models, Gaussian surrogates, and bootstrap resampling.

mod bootstrap;
mod heavy;
mod matrix;
mod model;
mod seed;
mod surrogate;

pub use bootstrap::{bootstrap_resample, resample_with};
pub use heavy::{sample_heavy_tailed_bivariate, HeavyTailParams};
pub use matrix::{DataMatrix, Provenance};
pub(crate) use matrix::{dot, norm_sq};
pub use model::{sample_iid_matrix, CoordinateLaw, Family, ModelSampler, ModelSpec, RowSampler};
pub use seed::{mix64, rng_from_seed, SeedStream, SimRng};
pub use surrogate::{
    augment, augment_row, augmented_dim, augmented_surrogate, gaussian_moment, gaussian_power_moments,
    gaussian_surrogate, Covariance, GaussianMoments, GaussianSampler, MomentSource, DEFAULT_AUGMENT_LIMIT,
    PSD_TOLERANCE,
};
