//! Heavy-tailed discrete-plus-Gaussian variable used by the lower-bound construction.
//!
//! `U` takes values `{-x0, 0, 2 x0}` with masses `{2p, 1 - 3p, p}` where
//! `p = sigma^(2 nu / (nu - 2))` and `x0 = sigma / sqrt(6 p)`, so that `E U = 0` and
//! `Var U = sigma^2` while `E |U|^nu` stays of order one as `sigma -> 0`.
//! The observed variable is `V = (U + Z) / sqrt(2)` with `Z ~ N(0, sigma^2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::matrix::DataMatrix;
use super::seed::{rng_from_seed, SimRng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailParams {
    pub nu: f64,
    pub sigma: f64,
    pub p: f64,
    pub x0: f64,
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if nu > 2.0 && nu <= 3.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("nu = {nu} must lie in (2, 3]")))
    }
}

impl HeavyTailParams {
    pub fn new(nu: f64, sigma: f64) -> Result<Self> {
        check_nu(nu)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma = {sigma} must be positive")));
        }
        let p = sigma.powf(2.0 * nu / (nu - 2.0));
        let mass = 1.0 - 3.0 * p;
        if mass < 0.0 {
            return Err(Error::ProbabilityMassInvalid { p, mass, sigma_ceiling: Self::sigma_ceiling(nu) });
        }
        let x0 = sigma / (6.0 * p).sqrt();
        if !(p > 0.0 && x0.is_finite()) {
            return Err(Error::domain(format!("p = sigma^(2nu/(nu-2)) underflows at nu = {nu}, sigma = {sigma}")));
        }
        Ok(Self { nu, sigma, p, x0 })
    }

    /// Largest sigma for which `3p <= 1`: `3^{-(nu-2)/(2 nu)}`.
    pub fn sigma_ceiling(nu: f64) -> f64 {
        3f64.powf(-(nu - 2.0) / (2.0 * nu))
    }

    /// `sigma_n = min(sigma0 n^{-(nu-2)/(2 nu)}, 1)`.
    pub fn sigma_for_sample_size(nu: f64, sigma0: f64, n: usize) -> f64 {
        (sigma0 * (n as f64).powf(-(nu - 2.0) / (2.0 * nu))).min(1.0)
    }

    pub fn for_sample_size(nu: f64, sigma0: f64, n: usize) -> Result<Self> {
        check_nu(nu)?;
        if !(sigma0 > 0.0) {
            return Err(Error::domain(format!("sigma0 = {sigma0} must be positive")));
        }
        Self::new(nu, Self::sigma_for_sample_size(nu, sigma0, n))
    }

    /// `(value, mass)` pairs of `U`.
    pub fn support(&self) -> [(f64, f64); 3] {
        [(-self.x0, 2.0 * self.p), (0.0, 1.0 - 3.0 * self.p), (2.0 * self.x0, self.p)]
    }

    /// Total mass, mean and variance of `U`, evaluated from the support.
    pub fn analytic_moments(&self) -> (f64, f64, f64) {
        let s = self.support();
        let total: f64 = s.iter().map(|(_, w)| w).sum();
        let mean: f64 = s.iter().map(|(x, w)| x * w).sum();
        let second: f64 = s.iter().map(|(x, w)| x * x * w).sum();
        (total, mean, second - mean * mean)
    }

    #[inline]
    pub fn draw_u(&self, rng: &mut SimRng) -> f64 {
        let u: f64 = rng.random();
        if u < 2.0 * self.p {
            -self.x0
        } else if u < 3.0 * self.p {
            2.0 * self.x0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn draw_v(&self, rng: &mut SimRng) -> f64 {
        let u = self.draw_u(rng);
        let z: f64 = rng.sample(StandardNormal);
        std::f64::consts::FRAC_1_SQRT_2 * (u + self.sigma * z)
    }
}

/// Draws `n` rows `(V_i, Y_i)` with `V_i` from the heavy-tailed law at
/// `sigma_n = min(sigma0 n^{-(nu-2)/(2 nu)}, 1)` and `Y_i ~ N(0, 1)` independent.
///
/// `m` is the degree of the companion polynomial `p*_m`; it must be at least 1.
pub fn sample_heavy_tailed_bivariate(nu: f64, sigma0: f64, m: u32, n: usize, seed: u64) -> Result<DataMatrix> {
    if m == 0 {
        return Err(Error::domain("degree m must be >= 1"));
    }
    if n == 0 {
        return Err(Error::TooFewRows { required: 1, got: 0 });
    }
    let params = HeavyTailParams::for_sample_size(nu, sigma0, n)?;
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(2 * n);
    for _ in 0..n {
        values.push(params.draw_v(&mut rng));
        values.push(rng.sample(StandardNormal));
    }
    Ok(DataMatrix::from_parts(n, 2, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn support_at_nu3_sigma_half() {
        let h = HeavyTailParams::new(3.0, 0.5).unwrap();
        assert!((h.p - 0.015625).abs() < 1e-15);
        assert!((h.x0 - 1.632_993_161_855_452).abs() < 1e-9);
        let s = h.support();
        assert!((s[0].0 + 1.632993).abs() < 1e-6 && (s[0].1 - 0.03125).abs() < 1e-15);
        assert!((s[1].1 - 0.953125).abs() < 1e-15);
        assert!((s[2].0 - 3.265986).abs() < 1e-6 && (s[2].1 - 0.015625).abs() < 1e-15);
    }

    #[test]
    fn sigma_one_is_invalid() {
        match HeavyTailParams::new(3.0, 1.0) {
            Err(Error::ProbabilityMassInvalid { p, mass, sigma_ceiling }) => {
                assert_eq!(p, 1.0);
                assert_eq!(mass, -2.0);
                assert!((sigma_ceiling - 3f64.powf(-1.0 / 6.0)).abs() < 1e-15);
            }
            other => panic!("expected ProbabilityMassInvalid, got {other:?}"),
        }
    }

    #[test]
    fn nu_outside_open_interval_rejected() {
        assert!(HeavyTailParams::new(2.0, 0.1).is_err());
        assert!(HeavyTailParams::new(3.5, 0.1).is_err());
        assert!(HeavyTailParams::new(2.0001, 0.1).is_err());
    }

    #[test]
    fn sigma_n_schedule() {
        let s = HeavyTailParams::sigma_for_sample_size(3.0, 1.0, 4096);
        assert!((s - 0.25).abs() < 1e-12);
        assert_eq!(HeavyTailParams::sigma_for_sample_size(3.0, 10.0, 2), 1.0);
    }

    proptest! {
        #[test]
        fn analytic_moments_hold(nu in 2.2f64..=3.0, frac in 0.05f64..=1.0) {
            let sigma = frac * HeavyTailParams::sigma_ceiling(nu);
            let h = HeavyTailParams::new(nu, sigma).unwrap();
            let (total, mean, var) = h.analytic_moments();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(mean.abs() <= 1e-12 * sigma);
            prop_assert!((var / (sigma * sigma) - 1.0).abs() < 1e-10);
        }
    }
}
