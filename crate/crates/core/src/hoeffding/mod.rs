//! Hoeffding decomposition of U-statistics: conditional variances, projections,
//! exact variance formulas and dominance diagnostics.

mod projection;
mod variance;

pub use projection::{
    berry_esseen_ratio, cond_variance, hoeffding_projection, linear_hoeffding_components, linear_kernel_sigma2,
    linear_projection, reconstruct, BerryEsseenRatio, CondVariance, Estimate, Projection, Reconstruction,
};
pub use variance::{
    binomial_exact, ln_binomial, rescaled_variances, ustat_variance_formula, variance_ratio, HoeffdingSummary,
    VarianceRatio,
};
