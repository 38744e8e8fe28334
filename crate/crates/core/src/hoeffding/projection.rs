use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::variance::binomial_exact;
use crate::datagen::{DataMatrix, GaussianMoments, RowSampler, SeedStream, SimRng};
use crate::error::{Error, Result};
use crate::statistics::{complete_u, falling_factorial, KernelSpec, DEFAULT_ENUMERATION_BUDGET};

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    fn from_draws(z: &[f64]) -> Self {
        let b = z.len() as f64;
        let mean = z.iter().sum::<f64>() / b;
        let var = if z.len() > 1 { z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0) } else { 0.0 };
        Estimate { value: mean, se: (var / b).sqrt() }
    }
}

/// Nested Monte-Carlo estimate of `sigma_j^2 = Var E[u(Y_1..Y_m) | Y_1..Y_j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondVariance {
    pub j: usize,
    /// Between-group variance minus mean within-group variance over `B_inner`.
    pub estimate: f64,
    /// Between-group variance of the inner means, biased upward.
    pub raw: f64,
    pub se: f64,
}

fn fresh_rows(sampler: &dyn RowSampler, rng: &mut SimRng, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let mut r = vec![0.0; sampler.dim()];
            sampler.fill_row(rng, &mut r);
            r
        })
        .collect()
}

fn check_order(m: usize, j: usize) -> Result<()> {
    if m == 0 || j == 0 || j > m {
        return Err(Error::domain(format!("need 1 <= j <= m, got j = {j}, m = {m}")));
    }
    Ok(())
}

pub fn cond_variance(
    kernel: &KernelSpec,
    m: usize,
    j: usize,
    sampler: &dyn RowSampler,
    b_outer: usize,
    b_inner: usize,
    seed: u64,
) -> Result<CondVariance> {
    check_order(m, j)?;
    if b_outer < 2 {
        return Err(Error::domain("B_outer must be >= 2"));
    }
    if j < m && b_inner < 2 {
        return Err(Error::domain("B_inner must be >= 2"));
    }
    let stream = SeedStream::new(seed);
    // (inner mean, inner variance / B_inner) per outer draw
    let groups: Vec<(f64, f64)> = (0..b_outer as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.rng(b);
            let fixed = fresh_rows(sampler, &mut rng, j);
            if j == m {
                let args: Vec<&[f64]> = fixed.iter().map(|r| r.as_slice()).collect();
                return (kernel.eval(&args), 0.0);
            }
            let mut vals = Vec::with_capacity(b_inner);
            for _ in 0..b_inner {
                let rest = fresh_rows(sampler, &mut rng, m - j);
                let args: Vec<&[f64]> = fixed.iter().chain(rest.iter()).map(|r| r.as_slice()).collect();
                vals.push(kernel.eval(&args));
            }
            let mean = vals.iter().sum::<f64>() / b_inner as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b_inner as f64 - 1.0);
            (mean, var / b_inner as f64)
        })
        .collect();
    let bo = b_outer as f64;
    let grand = groups.iter().map(|g| g.0).sum::<f64>() / bo;
    let z: Vec<f64> = groups.iter().map(|(g, w)| (g - grand).powi(2) * bo / (bo - 1.0) - w).collect();
    let raw = groups.iter().map(|g| (g.0 - grand).powi(2)).sum::<f64>() / (bo - 1.0);
    let est = Estimate::from_draws(&z);
    Ok(CondVariance { j, estimate: est.value, raw, se: est.se })
}

/// Alternating sum `sum_{S ⊆ [j]} (-1)^{j-|S|} u(y_S, fresh_1..fresh_{m-|S|})` for one
/// set of fresh draws: an unbiased single-draw estimate of `u^H_j(y_1..y_j)`.
fn alternating_sum(kernel: &KernelSpec, m: usize, points: &[&[f64]], fresh: &[Vec<f64>]) -> f64 {
    let j = points.len();
    let mut total = 0.0;
    let mut args: Vec<&[f64]> = Vec::with_capacity(m);
    for mask in 0u32..(1u32 << j) {
        args.clear();
        for (k, p) in points.iter().enumerate() {
            if mask >> k & 1 == 1 {
                args.push(p);
            }
        }
        let r = args.len();
        args.extend(fresh[..m - r].iter().map(|v| v.as_slice()));
        let sign = if (j - r) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * kernel.eval(&args);
    }
    total
}

/// Monte-Carlo value of the Hoeffding kernel `u^H_j` at the given points.
/// The same fresh draws are shared across all subsets (common random numbers).
pub fn hoeffding_projection(
    kernel: &KernelSpec,
    m: usize,
    points: &[&[f64]],
    sampler: &dyn RowSampler,
    draws: usize,
    seed: u64,
) -> Result<Estimate> {
    check_order(m, points.len())?;
    if draws < 2 {
        return Err(Error::domain("need at least 2 draws"));
    }
    let stream = SeedStream::new(seed);
    let z: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|b| {
            let fresh = fresh_rows(sampler, &mut stream.rng(b), m);
            alternating_sum(kernel, m, points, &fresh)
        })
        .collect();
    Ok(Estimate::from_draws(&z))
}

/// Closed form of `u^H_j` for the multilinear kernel `sum_l prod_k y_{k,l}` with mean `mu`:
/// `sum_l mu_l^{m-j} prod_{k<=j} (y_{k,l} - mu_l)`.
pub fn linear_projection(m: usize, mu: &[f64], points: &[&[f64]]) -> f64 {
    let j = points.len();
    (0..mu.len())
        .map(|l| mu[l].powi((m - j) as i32) * points.iter().map(|p| p[l] - mu[l]).product::<f64>())
        .sum()
}

/// Elementary symmetric polynomials `e_0..e_k` of `values`.
fn elementary_symmetric(values: impl Iterator<Item = f64>, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for v in values {
        for r in (1..=k).rev() {
            e[r] += v * e[r - 1];
        }
    }
    e
}

/// `U^H_j(Y)` for `j = 1..=m` under the multilinear kernel, in `O(n m d)`:
/// the average over ordered distinct tuples of `prod_k c_{i_k}` is `j! e_j(c) / (n)_j`.
pub fn linear_hoeffding_components(x: &DataMatrix, mu: &[f64], m: usize) -> Result<Vec<f64>> {
    if mu.len() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), got: mu.len() });
    }
    if x.n() < m {
        return Err(Error::TooFewRows { required: m, got: x.n() });
    }
    let n = x.n();
    let mut out = vec![0.0; m];
    for l in 0..x.d() {
        let e = elementary_symmetric(x.rows().map(|r| r[l] - mu[l]), m);
        let mut fact = 1.0;
        for j in 1..=m {
            fact *= j as f64;
            out[j - 1] += mu[l].powi((m - j) as i32) * fact * e[j] / falling_factorial(n, j) as f64;
        }
    }
    Ok(out)
}

/// `sigma_1^2 = mu^T Sigma mu` and `sigma_2^2 = 2 mu^T Sigma mu + Tr Sigma^2` for `u(y_1, y_2) = y_1^T y_2`;
/// valid for any law with these first two moments.
pub fn linear_kernel_sigma2(moments: &GaussianMoments) -> [f64; 2] {
    let d = moments.dim();
    let mu = &moments.mean;
    let mut quad = 0.0;
    let mut tr2 = 0.0;
    for i in 0..d {
        for k in 0..d {
            let c = moments.cov_entry(i, k);
            if c != 0.0 {
                quad += mu[i] * c * mu[k];
                tr2 += c * c;
            }
        }
    }
    [quad, 2.0 * quad + tr2]
}

/// How `u^H_M` is evaluated inside [`berry_esseen_ratio`].
#[derive(Debug, Clone)]
pub enum Projection {
    /// Multilinear kernel with known mean.
    LinearClosedForm { mu: Vec<f64> },
    /// Inner Monte-Carlo with this many draws per point.
    MonteCarlo { draws: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenRatio {
    pub value: f64,
    pub l_nu: f64,
    pub l_2: f64,
}

/// `|u^H_M|_{L_nu} / |u^H_M|_{L_2}` over `b` draws of `(Y_1..Y_M)`.
#[allow(clippy::too_many_arguments)]
pub fn berry_esseen_ratio(
    kernel: &KernelSpec,
    m: usize,
    order: usize,
    nu: f64,
    sampler: &dyn RowSampler,
    b: usize,
    seed: u64,
    projection: &Projection,
) -> Result<BerryEsseenRatio> {
    if !(nu > 2.0 && nu <= 3.0) {
        return Err(Error::domain(format!("nu = {nu} must lie in (2, 3]")));
    }
    check_order(m, order)?;
    let stream = SeedStream::new(seed);
    let h: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i);
            let pts = fresh_rows(sampler, &mut rng, order);
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            match projection {
                Projection::LinearClosedForm { mu } => linear_projection(m, mu, &refs),
                Projection::MonteCarlo { draws } => {
                    let inner = SimRng::seed_from_u64(stream.fork(1).derive(i));
                    let mut inner = inner;
                    let mut acc = 0.0;
                    for _ in 0..*draws {
                        let fresh = fresh_rows(sampler, &mut inner, m);
                        acc += alternating_sum(kernel, m, &refs, &fresh);
                    }
                    acc / *draws as f64
                }
            }
        })
        .collect();
    let bf = h.len() as f64;
    let l_2 = (h.iter().map(|v| v * v).sum::<f64>() / bf).sqrt();
    if l_2 == 0.0 {
        return Err(Error::DegenerateDenominator(format!("L2 norm of the order-{order} projection is zero")));
    }
    let l_nu = (h.iter().map(|v| v.abs().powf(nu)).sum::<f64>() / bf).powf(1.0 / nu);
    Ok(BerryEsseenRatio { value: l_nu / l_2, l_nu, l_2 })
}

/// Source of the conditional expectations used by [`reconstruct`].
pub enum Reconstruction<'a> {
    /// Multilinear kernel with known mean: the residual is zero up to rounding.
    ClosedForm { mu: &'a [f64] },
    /// Conditional expectations replaced by shared fresh draws; the residual is an
    /// average of `draws` unbiased single-draw residuals.
    MonteCarlo { sampler: &'a dyn RowSampler, draws: usize, seed: u64 },
}

/// `u_m(Y) - E u - sum_j C(m,j) U^H_j(Y)`.
pub fn reconstruct(kernel: &KernelSpec, m: usize, x: &DataMatrix, how: Reconstruction<'_>) -> Result<Estimate> {
    let um = complete_u(x, kernel, m, DEFAULT_ENUMERATION_BUDGET)?;
    let binom = |j: usize| binomial_exact(m as u64, j as u64).unwrap_or(0) as f64;
    match how {
        Reconstruction::ClosedForm { mu } => {
            if !kernel.is_linear() {
                return Err(Error::domain("closed-form reconstruction needs the linear kernel"));
            }
            let mean: f64 = mu.iter().map(|v| v.powi(m as i32)).sum();
            let parts = linear_hoeffding_components(x, mu, m)?;
            let sum: f64 = parts.iter().enumerate().map(|(k, u)| binom(k + 1) * u).sum();
            Ok(Estimate { value: um - mean - sum, se: 0.0 })
        }
        Reconstruction::MonteCarlo { sampler, draws, seed } => {
            if draws < 2 {
                return Err(Error::domain("need at least 2 draws"));
            }
            let n = x.n();
            // every ordered distinct j-tuple for j = 1..m
            let mut tuples: Vec<Vec<Vec<usize>>> = Vec::with_capacity(m);
            for j in 1..=m {
                let count = falling_factorial(n, j);
                if count > 100_000 {
                    return Err(Error::EnumerationBudget { tuples: count, budget: 100_000 });
                }
                let mut all = Vec::new();
                let mut cur = Vec::with_capacity(j);
                fn fill(n: usize, j: usize, cur: &mut Vec<usize>, all: &mut Vec<Vec<usize>>) {
                    if cur.len() == j {
                        all.push(cur.clone());
                        return;
                    }
                    for i in 0..n {
                        if !cur.contains(&i) {
                            cur.push(i);
                            fill(n, j, cur, all);
                            cur.pop();
                        }
                    }
                }
                fill(n, j, &mut cur, &mut all);
                tuples.push(all);
            }
            let stream = SeedStream::new(seed);
            let z: Vec<f64> = (0..draws as u64)
                .into_par_iter()
                .map(|b| {
                    let fresh = fresh_rows(sampler, &mut stream.rng(b), m);
                    let args: Vec<&[f64]> = fresh.iter().map(|v| v.as_slice()).collect();
                    let mean_hat = kernel.eval(&args);
                    let mut sum = 0.0;
                    for (k, all) in tuples.iter().enumerate() {
                        let avg = all
                            .iter()
                            .map(|t| {
                                let pts: Vec<&[f64]> = t.iter().map(|&i| x.row(i)).collect();
                                alternating_sum(kernel, m, &pts, &fresh)
                            })
                            .sum::<f64>()
                            / all.len() as f64;
                        sum += binom(k + 1) * avg;
                    }
                    um - mean_hat - sum
                })
                .collect();
            Ok(Estimate::from_draws(&z))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_iid_matrix, Covariance, GaussianSampler, ModelSpec};

    fn gaussian(mu: Vec<f64>) -> GaussianSampler {
        let d = mu.len();
        GaussianSampler::new(&GaussianMoments::new(mu, Covariance::Diagonal(vec![1.0; d])).unwrap()).unwrap()
    }

    #[test]
    fn cond_variance_matches_closed_forms() {
        let s = gaussian(vec![1.0, 0.0]);
        let k = KernelSpec::LinearInner;
        let c1 = cond_variance(&k, 2, 1, &s, 4000, 50, 1).unwrap();
        assert!((c1.estimate - 1.0).abs() < 3.0 * c1.se, "{c1:?}");
        assert!(c1.raw > c1.estimate);
        let c2 = cond_variance(&k, 2, 2, &s, 40_000, 2, 2).unwrap();
        assert!((c2.estimate - 4.0).abs() < 3.0 * c2.se, "{c2:?}");
        let s0 = gaussian(vec![0.0, 0.0]);
        let c0 = cond_variance(&k, 2, 1, &s0, 4000, 50, 3).unwrap();
        assert!(c0.estimate.abs() < 3.0 * c0.se, "{c0:?}");
    }

    #[test]
    fn linear_projection_examples() {
        let mu = [1.0, 0.0];
        assert_eq!(linear_projection(2, &mu, &[&[2.0, 0.0]]), 1.0);
        assert_eq!(linear_projection(2, &mu, &[&mu, &mu]), 0.0);
        let s = gaussian(mu.to_vec());
        let m = GaussianMoments::new(mu.to_vec(), Covariance::Diagonal(vec![1.0; 2])).unwrap();
        assert_eq!(linear_kernel_sigma2(&m), [1.0, 4.0]);
        let stream = SeedStream::new(4);
        let k = KernelSpec::LinearInner;
        for t in 0..20u64 {
            let pts = sample_iid_matrix(&ModelSpec::isotropic_gaussian(2), 2, stream.derive(t)).unwrap();
            for j in 1..=2 {
                let p: Vec<&[f64]> = (0..j).map(|i| pts.row(i)).collect();
                let est = hoeffding_projection(&k, 2, &p, &s, 4000, stream.derive(100 + t)).unwrap();
                let exact = linear_projection(2, &mu, &p);
                assert!((est.value - exact).abs() <= 3.0 * est.se + 1e-12, "j={j}: {est:?} vs {exact}");
            }
        }
    }

    #[test]
    fn berry_esseen_gaussian_oracle() {
        let s = gaussian(vec![1.0, 0.0]);
        let k = KernelSpec::LinearInner;
        let proj = Projection::LinearClosedForm { mu: vec![1.0, 0.0] };
        let r = berry_esseen_ratio(&k, 2, 1, 3.0, &s, 400_000, 5, &proj).unwrap();
        let exact = (2.0 * (2.0 / std::f64::consts::PI).sqrt()).powf(1.0 / 3.0);
        assert!((r.value - exact).abs() < 0.01, "{} vs {exact}", r.value);
        assert!(berry_esseen_ratio(&k, 2, 1, 2.0, &s, 10, 5, &proj).is_err());
        // y = 1 + Rademacher gives u^H_1(y) = (y - 1) * 1 in {-1, +1}
        let rad = ModelSpec::shift_scale(vec![1.0], 1.0, crate::datagen::CoordinateLaw::Rademacher).sampler(1).unwrap();
        let proj = Projection::LinearClosedForm { mu: vec![1.0] };
        let r = berry_esseen_ratio(&k, 2, 1, 3.0, &rad, 1000, 6, &proj).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let mc = berry_esseen_ratio(&k, 2, 1, 3.0, &s, 2000, 7, &Projection::MonteCarlo { draws: 200 }).unwrap();
        assert!(mc.value >= 1.0);
    }

    #[test]
    fn reconstruction_is_exact_in_closed_form() {
        let mu = vec![1.0, -0.5];
        let x = sample_iid_matrix(&ModelSpec::shift_scale(mu.clone(), 1.0, Default::default()), 6, 7).unwrap();
        for m in 1..=3 {
            let r = reconstruct(&KernelSpec::LinearInner, m, &x, Reconstruction::ClosedForm { mu: &mu }).unwrap();
            assert!(r.value.abs() < 1e-12, "m={m}: {}", r.value);
        }
    }

    #[test]
    fn reconstruction_in_monte_carlo_mode() {
        let mu = vec![1.0, 0.0];
        let s = gaussian(mu.clone());
        let x = sample_iid_matrix(&ModelSpec::shift_scale(mu, 1.0, Default::default()), 6, 8).unwrap();
        let k = KernelSpec::PolynomialInner { degree: 2, offset: 0.0 };
        let r = reconstruct(&k, 2, &x, Reconstruction::MonteCarlo { sampler: &s, draws: 4000, seed: 9 }).unwrap();
        // shared draws make each single-draw residual vanish algebraically
        assert!(r.value.abs() <= 4.0 * r.se + 1e-10, "{r:?}");
    }

    #[test]
    fn elementary_components_match_enumeration() {
        let mu = vec![0.3, 0.7];
        let x = sample_iid_matrix(&ModelSpec::isotropic_gaussian(2), 5, 10).unwrap();
        let fast = linear_hoeffding_components(&x, &mu, 3).unwrap();
        for j in 1..=3usize {
            let kern = {
                let mu = mu.clone();
                KernelSpec::callback(move |a| linear_projection(3, &mu, a))
            };
            let brute = complete_u(&x, &kern, j, 1000).unwrap();
            assert!((fast[j - 1] - brute).abs() < 1e-12);
        }
    }
}
