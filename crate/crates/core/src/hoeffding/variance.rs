use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Exact `C(n, k)` when it fits in `u128`.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(a, b) C(c, e) / C(n, k)` from exact integers where possible, logs otherwise.
fn binomial_ratio(num: [(u64, u64); 2], den: (u64, u64)) -> f64 {
    let exact = (|| {
        let a = binomial_exact(num[0].0, num[0].1)?;
        let b = binomial_exact(num[1].0, num[1].1)?;
        let c = binomial_exact(den.0, den.1)?;
        Some((a.checked_mul(b)?, c))
    })();
    match exact {
        Some((_, 0)) => f64::NAN,
        Some((p, q)) => p as f64 / q as f64,
        None => {
            if binomial_exact(num[0].0, num[0].1) == Some(0) || binomial_exact(num[1].0, num[1].1) == Some(0) {
                return 0.0;
            }
            (ln_binomial(num[0].0, num[0].1) + ln_binomial(num[1].0, num[1].1) - ln_binomial(den.0, den.1)).exp()
        }
    }
}

fn check_sigmas(m: usize, sigma2: &[f64]) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("degree m must be >= 1"));
    }
    if sigma2.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: sigma2.len() });
    }
    if let Some(v) = sigma2.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("conditional variance {v} must be finite and >= 0")));
    }
    Ok(())
}

/// `Var[u_m] = C(n,m)^{-1} sum_{r=1..m} C(m,r) C(n-m, m-r) sigma_r^2`,
/// where `sigma2[r-1] = Var E[u | Y_1..Y_r]`.
pub fn ustat_variance_formula(n: usize, m: usize, sigma2: &[f64]) -> Result<f64> {
    check_sigmas(m, sigma2)?;
    if n < 2 * m {
        return Err(Error::SampleTooSmall { n, m });
    }
    let (n, m64) = (n as u64, m as u64);
    Ok((1..=m64)
        .map(|r| binomial_ratio([(m64, r), (n - m64, m64 - r)], (n, m64)) * sigma2[r as usize - 1])
        .sum())
}

/// Rescaled variances `C(m,j)^2 C(n,j)^{-1} sigma_j^2`, the ratio `rho_{m,n;M}` and the argmax order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatio {
    pub rescaled: Vec<f64>,
    pub rho: f64,
    pub dominant: usize,
}

pub fn rescaled_variances(n: usize, m: usize, sigma2: &[f64]) -> Result<Vec<f64>> {
    check_sigmas(m, sigma2)?;
    if n < m {
        return Err(Error::SampleTooSmall { n, m });
    }
    let (n, m64) = (n as u64, m as u64);
    Ok((1..=m64)
        .map(|j| {
            let c = binomial_ratio([(m64, j), (m64, j)], (n, j));
            c * sigma2[j as usize - 1]
        })
        .collect())
}

pub fn variance_ratio(n: usize, m: usize, sigma2: &[f64], order: usize) -> Result<VarianceRatio> {
    if order == 0 || order > m {
        return Err(Error::domain(format!("order M = {order} must lie in 1..={m}")));
    }
    let rescaled = rescaled_variances(n, m, sigma2)?;
    let denom = rescaled[order - 1];
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator(format!("rescaled variance of order {order} is zero")));
    }
    let rest: f64 = rescaled.iter().enumerate().filter(|(j, _)| *j != order - 1).map(|(_, v)| v).sum();
    let dominant = argmax(&rescaled) + 1;
    Ok(VarianceRatio { rho: rest / denom, dominant, rescaled })
}

fn argmax(v: &[f64]) -> usize {
    // first index attaining the maximum, so ties resolve to the lower order
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = j;
        }
    }
    best
}

/// Per-order diagnostics of a degree-`m` U-statistic at sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingSummary {
    pub m: usize,
    pub n: usize,
    /// `sigma2[j-1] = Var E[u | Y_1..Y_j]`.
    pub sigma2: Vec<f64>,
    pub rescaled: Vec<f64>,
    /// Order used in the denominator of `rho`.
    pub order: usize,
    pub rho: f64,
    /// Smallest `j` with `sigma_j^2 > 0`, if any.
    pub classical_order: Option<usize>,
    /// `argmax_j` of the rescaled variances.
    pub dominant_order: usize,
    pub beta_tilde: Option<f64>,
    pub variance: f64,
}

impl HoeffdingSummary {
    /// Uses the dominant order as `M` when `order` is `None`. `sigma_j^2` at or below
    /// `zero_tol * max_j sigma_j^2` counts as zero for the classical degeneracy order.
    pub fn from_variances(
        n: usize,
        m: usize,
        sigma2: Vec<f64>,
        order: Option<usize>,
        beta_tilde: Option<f64>,
        zero_tol: f64,
    ) -> Result<Self> {
        let rescaled = rescaled_variances(n, m, &sigma2)?;
        let dominant = argmax(&rescaled) + 1;
        let order = order.unwrap_or(dominant);
        let ratio = variance_ratio(n, m, &sigma2, order)?;
        let max = sigma2.iter().cloned().fold(0.0, f64::max);
        let classical_order = sigma2.iter().position(|s| *s > zero_tol * max).map(|j| j + 1);
        let variance = if n >= 2 * m { ustat_variance_formula(n, m, &sigma2)? } else { f64::NAN };
        Ok(Self {
            m,
            n,
            sigma2,
            rescaled,
            order,
            rho: ratio.rho,
            classical_order,
            dominant_order: dominant,
            beta_tilde,
            variance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial_exact(100, 2), Some(4950));
        assert_eq!(binomial_exact(5, 7), Some(0));
        assert!(binomial_exact(300, 150).is_none());
        assert!((ln_binomial(100, 2) - 4950f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn variance_formula_example() {
        let v = ustat_variance_formula(100, 2, &[1.0, 4.0]).unwrap();
        assert!((v - 200.0 / 4950.0).abs() < 1e-15);
        assert_eq!(ustat_variance_formula(100, 2, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(ustat_variance_formula(3, 2, &[1.0, 1.0]), Err(Error::SampleTooSmall { .. })));
    }

    #[test]
    fn shift_scale_variance_matches_closed_form() {
        // tau = 1, |mu| = 1, Sigma = I_50: sigma_1^2 = 1, sigma_2^2 = 2 + 50
        let (n, d) = (100.0, 50.0);
        let v = ustat_variance_formula(100, 2, &[1.0, 2.0 + d]).unwrap();
        let closed = 4.0 / n + 2.0 * d / (n * (n - 1.0));
        assert!((v - closed).abs() < 1e-12);
        assert!((v - 0.0501010).abs() < 1e-7);
    }

    #[test]
    fn ratio_examples() {
        let r = variance_ratio(100, 2, &[1.0, 4.0], 1).unwrap();
        assert!((r.rescaled[0] - 0.04).abs() < 1e-15);
        assert!((r.rescaled[1] - 4.0 / 4950.0).abs() < 1e-15);
        assert!((r.rho - 0.020202).abs() < 1e-6);
        assert_eq!(r.dominant, 1);
        let r = variance_ratio(100, 2, &[0.0, 4.0], 2).unwrap();
        assert_eq!((r.dominant, r.rho), (2, 0.0));
        assert!(matches!(variance_ratio(100, 2, &[0.0, 4.0], 1), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn dominant_order_flips_with_dimension() {
        // |mu| = 1, Sigma = I_d: sigma_1^2 = 1, sigma_2^2 = 2 + d
        let n = 100;
        for (d, expect) in [(n / 10, 1), (10 * n, 2)] {
            let s = HoeffdingSummary::from_variances(n, 2, vec![1.0, 2.0 + d as f64], None, None, 1e-12).unwrap();
            assert_eq!(s.dominant_order, expect, "d = {d}");
            assert_eq!(s.classical_order, Some(1));
        }
    }

    #[test]
    fn large_n_falls_back_to_logs() {
        let n = 1_000_000_000;
        let v = ustat_variance_formula(n, 6, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        // leading term m^2 sigma_1^2 / n
        assert!((v * n as f64 / 36.0 - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn formula_equivalence(n in 4usize..400, d in 1usize..200, tau in 0.0f64..3.0, mu2 in 0.0f64..4.0) {
            // sigma_1^2 = tau^2 |mu|^2, sigma_2^2 = 2 tau^2 |mu|^2 + tau^4 d
            let s1 = tau * tau * mu2;
            let s2 = 2.0 * s1 + tau.powi(4) * d as f64;
            let v = ustat_variance_formula(n, 2, &[s1, s2]).unwrap();
            let nf = n as f64;
            let closed = 4.0 * s1 / nf + 2.0 * tau.powi(4) * d as f64 / (nf * (nf - 1.0));
            prop_assert!((v - closed).abs() <= 1e-12 * closed.max(1e-300));
        }

        #[test]
        fn variance_is_monotone_in_each_order(n in 10usize..200, a in 0.0f64..5.0, b in 0.0f64..5.0, bump in 0.0f64..5.0, r in 0usize..3) {
            let s = [a, a + b, a + b + 1.0];
            let mut t = s;
            t[r] += bump;
            prop_assert!(ustat_variance_formula(n, 3, &t).unwrap() >= ustat_variance_formula(n, 3, &s).unwrap());
        }
    }
}
