//! Universality bound functionals. Every unspecified absolute constant is set to 1,
//! so the values are rate functionals: compare slopes, not levels.

mod influence;

pub use influence::{influence_moment, InfluenceMoment};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: String,
    /// Raw value with every absolute constant set to 1.
    pub value: f64,
    /// `min(value, 1)`, the range of a Kolmogorov or total-variation distance.
    pub capped: f64,
    /// Always `true`: the level is only meaningful up to an unknown constant.
    pub constant_unspecified: bool,
    pub terms: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

impl BoundReport {
    fn new(formula: &str, terms: Vec<(String, f64)>) -> Self {
        let value: f64 = terms.iter().map(|t| t.1).sum();
        Self {
            formula: formula.to_string(),
            value,
            capped: value.clamp(0.0, 1.0),
            constant_unspecified: true,
            terms,
            flags: Vec::new(),
        }
    }
}

/// Inputs shared by the single-statistic bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    /// Degree of the polynomial.
    pub m: u32,
    pub nu: f64,
    /// Standard deviation of the statistic.
    pub sigma: f64,
    /// Influence moments `M_{nu;i}`, one per observation.
    pub influence: Vec<f64>,
    /// Evaluation point of the non-uniform bound.
    #[serde(default)]
    pub t: f64,
    /// `|f - q_m|_{L_2}` for the variance-domination bound.
    #[serde(default)]
    pub l2_residual: f64,
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if nu > 2.0 && nu <= 3.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("nu = {nu} must lie in (2, 3]")))
    }
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        check_nu(self.nu)?;
        if self.m == 0 {
            return Err(Error::domain("m must be >= 1"));
        }
        if self.sigma == 0.0 {
            return Err(Error::DegenerateDenominator("statistic standard deviation sigma is zero".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain(format!("sigma = {} must be positive", self.sigma)));
        }
        if let Some(v) = self.influence.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("influence moment {v} must be finite and >= 0")));
        }
        if !(self.l2_residual >= 0.0) {
            return Err(Error::domain(format!("l2_residual = {} must be >= 0", self.l2_residual)));
        }
        Ok(())
    }

    /// `sum_i M_{nu;i}^nu / sigma^nu`.
    pub fn influence_ratio(&self) -> f64 {
        self.influence.iter().map(|v| v.powf(self.nu)).sum::<f64>() / self.sigma.powf(self.nu)
    }
}

/// `m (sum_i M_{nu;i}^nu / ((1+t^2)^{nu/2} sigma^nu))^{1/(nu m + 1)}`.
pub fn thm_main_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate()?;
    let (m, nu) = (inp.m as f64, inp.nu);
    let ratio = inp.influence_ratio() / (1.0 + inp.t * inp.t).powf(nu / 2.0);
    Ok(BoundReport::new("main", vec![("influence".into(), m * ratio.powf(1.0 / (nu * m + 1.0)))]))
}

/// `m ((|f - q_m|_{L_2}/sigma)^{2/(2m+1)} + (sum_i M_{nu;i}^nu / sigma^nu)^{1/(nu m + 1)})`.
pub fn thm_vd_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate()?;
    let (m, nu) = (inp.m as f64, inp.nu);
    Ok(BoundReport::new(
        "variance_domination",
        vec![
            ("residual".into(), m * (inp.l2_residual / inp.sigma).powf(2.0 / (2.0 * m + 1.0))),
            ("influence".into(), m * inp.influence_ratio().powf(1.0 / (nu * m + 1.0))),
        ],
    ))
}

/// Degree-`m` V-statistic bound:
/// `m^{3+theta} n^{-(nu-2)/(2 nu m + 2)} ((|S|_{l1}^2 + 1/n) / (L2 + m^{m(4+2 theta)}/n))^{nu/(2 nu m + 2)}`,
/// where `l2_moment` is the squared norm `|<S, X_1 ⊗ ... ⊗ X_m>|_{L_2}^2`.
pub fn prop_simpler_v_bound(n: usize, m: u32, nu: f64, theta: f64, s_l1: f64, l2_moment: f64) -> Result<BoundReport> {
    check_nu(nu)?;
    let (nf, mf) = (n as f64, m as f64);
    if m == 0 || 2.0 * mf * mf >= nf {
        return Err(Error::domain(format!("need 2 m^2 < n, got m = {m}, n = {n}")));
    }
    if !(theta > 0.0) || !(s_l1 >= 0.0) || !(l2_moment >= 0.0) {
        return Err(Error::domain("theta must be positive; |S|_l1 and the L2 moment must be >= 0"));
    }
    let e = 2.0 * nu * mf + 2.0;
    let ratio = (s_l1 * s_l1 + 1.0 / nf) / (l2_moment + mf.powf(mf * (4.0 + 2.0 * theta)) / nf);
    let value = mf.powf(3.0 + theta) * nf.powf(-(nu - 2.0) / e) * ratio.powf(nu / e);
    Ok(BoundReport::new("simpler_v", vec![("v_statistic".into(), value)]))
}

/// Degree-`m` U-statistic bound around dominant order `M`:
/// `m n^{-(nu-2)/(2(nu M + 1))} beta^{nu/(nu M + 1)} + m rho^{1/(2M+1)}`.
pub fn prop_higher_u_bound(n: usize, order: u32, m: u32, nu: f64, beta_tilde: f64, rho: f64) -> Result<BoundReport> {
    check_nu(nu)?;
    if order == 0 || order > m {
        return Err(Error::domain(format!("order M = {order} must lie in 1..={m}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::domain(format!("rho = {rho} must be >= 0")));
    }
    // Lyapunov: |h|_{L_nu} >= |h|_{L_2} for nu > 2
    if beta_tilde < 1.0 - 1e-12 {
        return Err(Error::MomentOrderViolated { ratio: beta_tilde });
    }
    let (nf, mf, mo) = (n as f64, m as f64, order as f64);
    let t1 = mf * nf.powf(-(nu - 2.0) / (2.0 * (nu * mo + 1.0))) * beta_tilde.powf(nu / (nu * mo + 1.0));
    let t2 = mf * rho.powf(1.0 / (2.0 * mo + 1.0));
    Ok(BoundReport::new("higher_u", vec![("berry_esseen".into(), t1), ("variance_ratio".into(), t2)]))
}

/// `sqrt((4m - 4)/(3m) |kurt|)`.
pub fn fourth_moment_bound(m: u32, kurt: f64) -> Result<BoundReport> {
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    let mf = m as f64;
    let v = ((4.0 * mf - 4.0) / (3.0 * mf) * kurt.abs()).sqrt();
    Ok(BoundReport::new("fourth_moment", vec![("kurtosis".into(), v)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// `n^{-(nu-2)/(2 nu m)}`.
    pub lower: f64,
    /// `m n^{-(nu-2)/(2 nu m + 2)}`.
    pub upper: f64,
    /// The lower-bound construction needs even `m`.
    pub lower_applicable: bool,
    pub flags: Vec<String>,
}

pub fn lower_upper_rates(n: usize, m: u32, nu: f64) -> Result<Rates> {
    check_nu(nu)?;
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    let (nf, mf) = (n as f64, m as f64);
    let lower = nf.powf(-(nu - 2.0) / (2.0 * nu * mf));
    let upper = mf * nf.powf(-(nu - 2.0) / (2.0 * nu * mf + 2.0));
    let even = m % 2 == 0;
    let flags = if even { Vec::new() } else { vec!["construction requires even m".to_string()] };
    Ok(Rates { lower, upper, lower_applicable: even, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(n: usize, m: u32, sigma: f64, infl: f64, t: f64) -> BoundInputs {
        BoundInputs { n, m, nu: 3.0, sigma, influence: vec![infl; n], t, l2_residual: 0.0 }
    }

    #[test]
    fn average_example() {
        // M_i = n^{-1/2} |X|_{L_3} with |X|_{L_3}^3 = 2: sum_i M_i^3 = 2 / sqrt(n)
        let n = 10_000;
        let infl = (2.0f64).powf(1.0 / 3.0) / (n as f64).sqrt();
        let r = thm_main_bound(&inputs(n, 1, 1.0, infl, 0.0)).unwrap();
        assert!((r.value - 0.02f64.powf(0.25)).abs() < 1e-12);
        assert!((r.value - 0.3761).abs() < 1e-4);
        assert!(r.constant_unspecified);
        let far = thm_main_bound(&inputs(n, 1, 1.0, infl, 1e6)).unwrap();
        assert!(far.value < 1e-3);
        let zero = BoundInputs { sigma: 0.0, ..inputs(4, 1, 1.0, 0.1, 0.0) };
        assert!(matches!(thm_main_bound(&zero), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn doubling_degree() {
        let a = inputs(100, 1, 1.0, 0.05, 0.0);
        let r = a.influence_ratio();
        let b = BoundInputs { m: 2, ..a.clone() };
        let (va, vb) = (thm_main_bound(&a).unwrap().value, thm_main_bound(&b).unwrap().value);
        let factor = 2.0 * r.powf(1.0 / 7.0 - 1.0 / 4.0);
        assert!((vb / va - factor).abs() < 1e-12);
    }

    #[test]
    fn variance_domination_examples() {
        let a = inputs(50, 2, 1.3, 0.02, 0.0);
        let vd = thm_vd_bound(&a).unwrap();
        assert!((vd.value - thm_main_bound(&a).unwrap().value).abs() < 1e-15);
        // u_2 at n = 100, d = 50: residual^2 / sigma^2 = (100/9900) / 0.04
        let ratio: f64 = (100.0 / 9900.0) / 0.04;
        let b = BoundInputs { m: 1, sigma: 1.0, l2_residual: ratio.sqrt(), influence: vec![0.0; 4], ..a };
        let term = thm_vd_bound(&b).unwrap().terms[0].1;
        assert!((ratio - 0.2525).abs() < 1e-4);
        assert!((term - ratio.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((term - 0.632).abs() < 1e-3);
    }

    #[test]
    fn simpler_v_examples() {
        assert!(prop_simpler_v_bound(8, 2, 3.0, 0.5, 1.0, 1.0).is_err());
        let n: f64 = 1e4;
        let r = prop_simpler_v_bound(10_000, 2, 3.0, 0.5, 1.0, 1.0).unwrap();
        let expect = 2f64.powf(3.5) * n.powf(-1.0 / 14.0) * ((1.0f64 + 1e-4) / (1.0 + 1024.0 * 1e-4)).powf(3.0 / 14.0);
        assert!((r.value - expect).abs() < 1e-12);
        let big = prop_simpler_v_bound(10_000, 2, 3.0, 0.5, 1.0, 1e12).unwrap();
        let huge = prop_simpler_v_bound(10_000, 2, 3.0, 0.5, 1.0, 1e30).unwrap();
        assert!(huge.value < big.value && big.value < r.value);
        assert!(huge.value < 1e-5);
    }

    #[test]
    fn higher_u_examples() {
        let r = prop_higher_u_bound(10_000, 1, 2, 3.0, 1.0, 0.0).unwrap();
        assert_eq!(r.terms[1].1, 0.0);
        assert!((r.value - 2.0 * 1e4f64.powf(-0.125)).abs() < 1e-12);
        assert!((r.value - 0.6325).abs() < 1e-4);
        assert!(matches!(prop_higher_u_bound(10_000, 1, 2, 3.0, 0.5, 0.0), Err(Error::MomentOrderViolated { .. })));
    }

    #[test]
    fn fourth_moment_examples() {
        assert_eq!(fourth_moment_bound(1, 7.0).unwrap().value, 0.0);
        assert_eq!(fourth_moment_bound(3, 0.0).unwrap().value, 0.0);
        let r = fourth_moment_bound(2, 12.0).unwrap();
        assert!((r.value - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.capped, 1.0);
    }

    #[test]
    fn rate_examples() {
        let r = lower_upper_rates(10_000, 2, 3.0).unwrap();
        assert!((r.lower - 1e4f64.powf(-1.0 / 12.0)).abs() < 1e-12);
        assert!((r.lower - 0.4642).abs() < 1e-4);
        assert!((r.upper - 2.0 * 1e4f64.powf(-1.0 / 14.0)).abs() < 1e-12);
        assert!(r.lower_applicable);
        let near = lower_upper_rates(10_000, 2, 2.0 + 1e-9).unwrap();
        assert!((near.lower - 1.0).abs() < 1e-6 && (near.upper - 2.0).abs() < 1e-6);
        let odd = lower_upper_rates(100, 3, 3.0).unwrap();
        assert!(!odd.lower_applicable);
        assert_eq!(odd.flags, vec!["construction requires even m".to_string()]);
    }

    proptest! {
        #[test]
        fn monotone_in_sigma_influence_and_t(
            sigma in 0.1f64..5.0, ds in 0.0f64..2.0, infl in 0.0f64..1.0, di in 0.0f64..1.0,
            t in 0.0f64..5.0, dt in 0.0f64..5.0, m in 1u32..4, res in 0.0f64..1.0,
        ) {
            let base = BoundInputs { n: 10, m, nu: 2.5, sigma, influence: vec![infl; 10], t, l2_residual: res };
            for f in [thm_main_bound, thm_vd_bound] {
                let v = f(&base).unwrap().value;
                let bigger_sigma = BoundInputs { sigma: sigma + ds, ..base.clone() };
                let bigger_infl = BoundInputs { influence: vec![infl + di; 10], ..base.clone() };
                let bigger_t = BoundInputs { t: t + dt, ..base.clone() };
                prop_assert!(f(&bigger_sigma).unwrap().value <= v * (1.0 + 1e-12));
                prop_assert!(f(&bigger_infl).unwrap().value >= v * (1.0 - 1e-12));
                prop_assert!(f(&bigger_t).unwrap().value <= v * (1.0 + 1e-12));
                let r = f(&base).unwrap();
                prop_assert!(r.constant_unspecified && (0.0..=1.0).contains(&r.capped));
            }
        }

        #[test]
        fn sandwich_is_consistent(n in 2usize..100_000_000, half in 1u32..3) {
            let m = 2 * half;
            let r = lower_upper_rates(n, m, 3.0).unwrap();
            prop_assert!(r.lower < r.upper / m as f64);
        }
    }
}
