use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::gamma::gamma;

use super::heavy::{check_nu, HeavyTailParams};
use super::matrix::DataMatrix;
use super::seed::{rng_from_seed, SimRng};
use super::surrogate::{Covariance, GaussianMoments, GaussianSampler};
use crate::error::{Error, Result};

/// Law of the unit-variance coordinates `U_ij` in the shift-scale model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateLaw {
    #[default]
    Gaussian,
    Rademacher,
    /// `sign(G) |G|^{2 theta}`, rescaled to unit variance.
    SubWeibull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    IsotropicGaussian,
    /// i.i.d. symmetric unit-variance coordinates with tail exponent `theta`.
    SubWeibullIid,
    /// `X_ij = signal_sd * A_i + noise_sd * e_ij`: one common factor in every coordinate.
    SharedSignal { signal_sd: f64, noise_sd: f64 },
    /// `k` unit-variance Gaussian coordinates, the remaining `d - k` scaled by `eps`.
    SparseCoordinates { k: usize, eps: f64 },
    /// `X_i = mu + tau U_i`.
    ShiftScale {
        mu: Vec<f64>,
        tau: f64,
        #[serde(default)]
        coordinates: CoordinateLaw,
    },
    /// `(V_i, Y_i)` from the heavy-tailed construction; `d` must be 2.
    HeavyTailBivariate { nu: f64, sigma0: f64, m: u32 },
    ExplicitGaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

fn default_theta() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub d: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

/// Draws one observation at a time into a caller-provided buffer.
pub trait RowSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn fill_row(&self, rng: &mut SimRng, out: &mut [f64]);

    fn sample_matrix(&self, n: usize, rng: &mut SimRng) -> DataMatrix {
        let d = self.dim();
        let mut values = vec![0.0; n * d];
        for row in values.chunks_exact_mut(d) {
            self.fill_row(rng, row);
        }
        DataMatrix::from_parts(n, d, values)
    }
}

/// `E|G|^{4 theta}` for standard normal `G`; the squared scale of the sub-Weibull draw.
fn sub_weibull_second_moment(theta: f64) -> f64 {
    2f64.powf(2.0 * theta) * gamma(2.0 * theta + 0.5) / std::f64::consts::PI.sqrt()
}

#[inline]
fn fill_rademacher(rng: &mut SimRng, out: &mut [f64]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (k, x) in chunk.iter_mut().enumerate() {
            *x = if (bits >> k) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

#[inline]
fn fill_coordinates(law: CoordinateLaw, theta: f64, scale: f64, rng: &mut SimRng, out: &mut [f64]) {
    match law {
        CoordinateLaw::Gaussian => {
            for x in out.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
        CoordinateLaw::Rademacher => fill_rademacher(rng, out),
        CoordinateLaw::SubWeibull => {
            let p = 2.0 * theta;
            for x in out.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *x = g.signum() * g.abs().powf(p) / scale;
            }
        }
    }
}

/// A model with all per-sample-size quantities resolved, ready to draw rows.
#[derive(Debug, Clone)]
pub enum ModelSampler {
    Coordinates { d: usize, law: CoordinateLaw, theta: f64, scale: f64, shift: Option<Vec<f64>>, tau: f64 },
    SharedSignal { d: usize, signal_sd: f64, noise_sd: f64 },
    Sparse { d: usize, k: usize, eps: f64 },
    Heavy(HeavyTailParams),
    Gaussian(GaussianSampler),
}

impl RowSampler for ModelSampler {
    fn dim(&self) -> usize {
        match self {
            ModelSampler::Coordinates { d, .. } | ModelSampler::SharedSignal { d, .. } | ModelSampler::Sparse { d, .. } => *d,
            ModelSampler::Heavy(_) => 2,
            ModelSampler::Gaussian(g) => g.dim(),
        }
    }

    fn fill_row(&self, rng: &mut SimRng, out: &mut [f64]) {
        match self {
            ModelSampler::Coordinates { law, theta, scale, shift, tau, .. } => {
                fill_coordinates(*law, *theta, *scale, rng, out);
                if let Some(mu) = shift {
                    for (x, m) in out.iter_mut().zip(mu) {
                        *x = m + tau * *x;
                    }
                }
            }
            ModelSampler::SharedSignal { signal_sd, noise_sd, .. } => {
                let a: f64 = rng.sample(StandardNormal);
                for x in out.iter_mut() {
                    let e: f64 = rng.sample(StandardNormal);
                    *x = signal_sd * a + noise_sd * e;
                }
            }
            ModelSampler::Sparse { k, eps, .. } => {
                for (j, x) in out.iter_mut().enumerate() {
                    let g: f64 = rng.sample(StandardNormal);
                    *x = if j < *k { g } else { eps * g };
                }
            }
            ModelSampler::Heavy(h) => {
                out[0] = h.draw_v(rng);
                out[1] = rng.sample(StandardNormal);
            }
            ModelSampler::Gaussian(g) => g.fill_row(rng, out),
        }
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} must be finite and >= 0")))
    }
}

fn check_len(what: &str, len: usize, d: usize) -> Result<()> {
    if len == d {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} has length {len} but d = {d}")))
    }
}

impl ModelSpec {
    pub fn new(family: Family, d: usize) -> Self {
        Self { family, d, theta: default_theta() }
    }

    pub fn isotropic_gaussian(d: usize) -> Self {
        Self::new(Family::IsotropicGaussian, d)
    }

    pub fn shift_scale(mu: Vec<f64>, tau: f64, coordinates: CoordinateLaw) -> Self {
        let d = mu.len();
        Self::new(Family::ShiftScale { mu, tau, coordinates }, d)
    }

    pub fn heavy_tail_bivariate(nu: f64, sigma0: f64, m: u32) -> Self {
        Self::new(Family::HeavyTailBivariate { nu, sigma0, m }, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::domain("d must be >= 1"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::domain(format!("theta = {} must be positive", self.theta)));
        }
        match &self.family {
            Family::IsotropicGaussian | Family::SubWeibullIid => Ok(()),
            Family::SharedSignal { signal_sd, noise_sd } => {
                nonneg("signal_sd", *signal_sd)?;
                nonneg("noise_sd", *noise_sd)
            }
            Family::SparseCoordinates { k, eps } => {
                if *k > self.d {
                    return Err(Error::domain(format!("k = {k} exceeds d = {}", self.d)));
                }
                nonneg("eps", *eps)
            }
            Family::ShiftScale { mu, tau, .. } => {
                check_len("mu", mu.len(), self.d)?;
                if mu.iter().any(|x| !x.is_finite()) {
                    return Err(Error::domain("mu has non-finite entries"));
                }
                nonneg("tau", *tau)
            }
            Family::HeavyTailBivariate { nu, sigma0, m } => {
                check_nu(*nu)?;
                if !(*sigma0 > 0.0 && sigma0.is_finite()) {
                    return Err(Error::domain(format!("sigma0 = {sigma0} must be positive")));
                }
                if *m == 0 {
                    return Err(Error::domain("m must be >= 1"));
                }
                if self.d != 2 {
                    return Err(Error::domain(format!("heavy-tailed bivariate model needs d = 2, got {}", self.d)));
                }
                Ok(())
            }
            Family::ExplicitGaussian { mean, cov } => {
                check_len("mean", mean.len(), self.d)?;
                check_len("cov", cov.len(), self.d)?;
                for row in cov {
                    check_len("cov row", row.len(), self.d)?;
                }
                GaussianSampler::new(&self.explicit_moments()).map(|_| ())
            }
        }
    }

    fn explicit_moments(&self) -> GaussianMoments {
        match &self.family {
            Family::ExplicitGaussian { mean, cov } => GaussianMoments {
                mean: mean.clone(),
                cov: Covariance::Dense(cov.iter().flatten().copied().collect()),
            },
            _ => unreachable!("explicit_moments on non-explicit family"),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Mean and covariance of one row when the sample size is `n`
    /// (only the heavy-tailed family depends on `n`).
    pub fn population_moments(&self, n: usize) -> Result<GaussianMoments> {
        self.validate()?;
        let d = self.d;
        let m = match &self.family {
            Family::IsotropicGaussian | Family::SubWeibullIid => {
                GaussianMoments { mean: vec![0.0; d], cov: Covariance::Diagonal(vec![1.0; d]) }
            }
            Family::SharedSignal { signal_sd, noise_sd } => {
                let s2 = signal_sd * signal_sd;
                let mut cov = vec![s2; d * d];
                for i in 0..d {
                    cov[i * d + i] += noise_sd * noise_sd;
                }
                GaussianMoments { mean: vec![0.0; d], cov: Covariance::Dense(cov) }
            }
            Family::SparseCoordinates { k, eps } => GaussianMoments {
                mean: vec![0.0; d],
                cov: Covariance::Diagonal((0..d).map(|j| if j < *k { 1.0 } else { eps * eps }).collect()),
            },
            Family::ShiftScale { mu, tau, .. } => {
                GaussianMoments { mean: mu.clone(), cov: Covariance::Diagonal(vec![tau * tau; d]) }
            }
            Family::HeavyTailBivariate { nu, sigma0, .. } => {
                let h = HeavyTailParams::for_sample_size(*nu, *sigma0, n)?;
                GaussianMoments { mean: vec![0.0; 2], cov: Covariance::Diagonal(vec![h.sigma * h.sigma, 1.0]) }
            }
            Family::ExplicitGaussian { .. } => self.explicit_moments(),
        };
        Ok(m)
    }

    /// Resolved row sampler for sample size `n`.
    pub fn sampler(&self, n: usize) -> Result<ModelSampler> {
        self.validate()?;
        let d = self.d;
        let coords = |law, shift, tau| {
            let scale = if law == CoordinateLaw::SubWeibull { sub_weibull_second_moment(self.theta).sqrt() } else { 1.0 };
            ModelSampler::Coordinates { d, law, theta: self.theta, scale, shift, tau }
        };
        Ok(match &self.family {
            Family::IsotropicGaussian => coords(CoordinateLaw::Gaussian, None, 1.0),
            Family::SubWeibullIid => coords(CoordinateLaw::SubWeibull, None, 1.0),
            Family::SharedSignal { signal_sd, noise_sd } => {
                ModelSampler::SharedSignal { d, signal_sd: *signal_sd, noise_sd: *noise_sd }
            }
            Family::SparseCoordinates { k, eps } => ModelSampler::Sparse { d, k: *k, eps: *eps },
            Family::ShiftScale { mu, tau, coordinates } => coords(*coordinates, Some(mu.clone()), *tau),
            Family::HeavyTailBivariate { nu, sigma0, .. } => {
                ModelSampler::Heavy(HeavyTailParams::for_sample_size(*nu, *sigma0, n)?)
            }
            Family::ExplicitGaussian { .. } => ModelSampler::Gaussian(GaussianSampler::new(&self.explicit_moments())?),
        })
    }
}

/// `n` i.i.d. rows from `model`, drawn from the stream seeded by `seed`.
pub fn sample_iid_matrix(model: &ModelSpec, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::TooFewRows { required: 1, got: 0 });
    }
    let sampler = model.sampler(n)?;
    let x = sampler.sample_matrix(n, &mut rng_from_seed(seed));
    Ok(x.with_provenance(model.digest(), seed))
}
