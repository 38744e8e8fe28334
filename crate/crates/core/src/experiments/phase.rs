use super::{column, draws, kind_mismatch, sample_variance, ExperimentKind, ExperimentSpec, MmdGrid, ResultRow, ResultTable, U2Grid, Verdict};
use crate::datagen::{
    dot, norm_sq, rng_from_seed, Family, GaussianSampler, ModelSpec, RowSampler, SeedStream,
};
use crate::empirics::{excess_kurtosis, kolmogorov_from_values};
use crate::error::Result;
use crate::hoeffding::{linear_kernel_sigma2, HoeffdingSummary};
use crate::statistics::simple_u2;

const NAME: &str = "phase_transition";

/// Per grid point: law of the statistic under the data versus under its Gaussian
/// surrogate, versus the Gaussian law of its dominant Hoeffding component, the
/// component variances (Monte Carlo and closed form) and the excess kurtosis.
///
/// Two studies: `u_2` in the shift-scale model (rows `u2`), and the linear-kernel
/// MMD with imbalanced samples (rows `mmd`).
pub fn phase_transition(spec: &ExperimentSpec) -> Result<ResultTable> {
    let ExperimentKind::PhaseTransition(p) = &spec.kind else {
        return Err(kind_mismatch(NAME, spec));
    };
    spec.validate()?;
    let root = SeedStream::new(spec.seed());
    let mut rows = Vec::new();
    let mut g = 0u64;
    if let Some(grid) = &p.u2 {
        for &n in &grid.n {
            for &d in &grid.d {
                for &tau in &grid.tau {
                    for mu in &grid.mu {
                        let mu = mu.vector(d, n, tau);
                        rows.push(u2_point(spec, grid, n, mu, tau, root.fork(g))?);
                        g += 1;
                    }
                }
            }
        }
    }
    if let Some(grid) = &p.mmd {
        for &d in &grid.d {
            for &n2 in &grid.n2 {
                for n1 in mmd_n1(grid, d, n2) {
                    rows.push(mmd_point(spec, d, n1, n2, root.fork(g))?);
                    g += 1;
                }
            }
        }
    }
    Ok(ResultTable { experiment: NAME.to_string(), rows })
}

fn mmd_n1(grid: &MmdGrid, d: usize, n2: usize) -> Vec<usize> {
    match &grid.n1 {
        Some(v) => v.clone(),
        None => vec![((n2 * d) as f64).sqrt().ceil() as usize],
    }
}

/// `universal` when both the surrogate law and the dominant-component law sit within
/// the radius, `transition` when only the surrogate law does.
fn verdict(distance: f64, radius: f64, distance_alt: f64, radius_alt: f64) -> Verdict {
    if distance > radius {
        Verdict::Failure
    } else if distance_alt > radius_alt {
        Verdict::Transition
    } else {
        Verdict::Universal
    }
}

fn u2_point(spec: &ExperimentSpec, grid: &U2Grid, n: usize, mu: Vec<f64>, tau: f64, seeds: SeedStream) -> Result<ResultRow> {
    let d = mu.len();
    let model = ModelSpec::shift_scale(mu.clone(), tau, grid.coordinates);
    let sampler = model.sampler(n)?;
    let moments = model.population_moments(n)?;
    let gauss = GaussianSampler::new(&moments)?;
    let mu2 = norm_sq(&mu);

    let x = draws(spec.b, seeds.fork(0), |s| Ok(simple_u2(&sampler.sample_matrix(n, &mut rng_from_seed(s)))? - mu2))?;
    // centred u_2 under Z together with its linear part L = 2 mu^T (Z̄ - mu) and Q = rest
    let z = draws(spec.b, seeds.fork(1), |s| {
        let zm = gauss.sample_matrix(n, &mut rng_from_seed(s));
        let u = simple_u2(&zm)? - mu2;
        let l = 2.0 * (dot(&zm.mean(), &mu) - mu2);
        Ok([u, l, u - l])
    })?;
    let (zu, zl, zq) = (column(&z, 0), column(&z, 1), column(&z, 2));

    let sigma2 = linear_kernel_sigma2(&moments);
    let summary = HoeffdingSummary::from_variances(n, 2, sigma2.to_vec(), None, None, 1e-12)?;
    let dominant = if summary.dominant_order == 1 { &zl } else { &zq };
    let full = kolmogorov_from_values(&x, &zu, spec.alpha)?;
    let dom = kolmogorov_from_values(&x, dominant, spec.alpha)?;
    let kurt = excess_kurtosis(&x)?;
    let nf = n as f64;

    let mut r = ResultRow::new(NAME, "u2", n, d, spec.b);
    r.m = Some(2);
    r.tau = Some(tau);
    r.mu_norm = Some(mu2.sqrt());
    r.distance = Some(full.distance);
    r.radius = Some(full.dkw_radius);
    r.distance_alt = Some(dom.distance);
    r.radius_alt = Some(dom.dkw_radius);
    r.var1 = Some(sample_variance(&zl));
    r.var2 = Some(sample_variance(&zq));
    r.closed1 = Some(4.0 * sigma2[0] / nf);
    // the degenerate kernel y1^T y2 (centred) has variance Tr Sigma^2 = sigma_2^2 - 2 sigma_1^2
    r.closed2 = Some(2.0 * (sigma2[1] - 2.0 * sigma2[0]) / (nf * (nf - 1.0)));
    r.rescaled1 = Some(summary.rescaled[0]);
    r.rescaled2 = Some(summary.rescaled[1]);
    r.rho = Some(summary.rho);
    r.dominant_order = Some(summary.dominant_order);
    r.kurtosis = Some(kurt.value);
    r.kurtosis_se = Some(kurt.se);
    r.verdict = verdict(full.distance, full.dkw_radius, dom.distance, dom.dkw_radius);
    Ok(r)
}

/// `blockdiag(S_2, ..., S_2)` with `S_2 = [[1, -1], [-1, 1]] / sqrt 2`.
pub(crate) fn paired_block_cov(d: usize) -> Vec<Vec<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut cov = vec![vec![0.0; d]; d];
    for b in (0..d).step_by(2) {
        cov[b][b] = s;
        cov[b + 1][b + 1] = s;
        cov[b][b + 1] = -s;
        cov[b + 1][b] = -s;
    }
    cov
}

/// `(mu^T Sigma mu, Tr Sigma^2)` for a dense covariance.
fn quad_and_trace(mu: &[f64], cov: &[Vec<f64>]) -> (f64, f64) {
    let mut quad = 0.0;
    let mut tr2 = 0.0;
    for (i, row) in cov.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            quad += mu[i] * c * mu[k];
            tr2 += c * cov[k][i];
        }
    }
    (quad, tr2)
}

/// Closed-form variances of the linear and quadratic MMD components when
/// `P = N(0, Sigma_P)` and `Q = N(mu, I_d)`.
pub(crate) fn mmd_component_variances(mu: &[f64], cov_p: &[Vec<f64>], n1: usize, n2: usize) -> (f64, f64) {
    let d = mu.len() as f64;
    let (n1, n2) = (n1 as f64, n2 as f64);
    let (quad_p, tr_p2) = quad_and_trace(mu, cov_p);
    let tr_p: f64 = cov_p.iter().enumerate().map(|(i, r)| r[i]).sum();
    let s1 = 4.0 * quad_p / n1 + 4.0 * norm_sq(mu) / n2;
    let s2 = 2.0 * tr_p2 / (n1 * (n1 - 1.0)) + 2.0 * d / (n2 * (n2 - 1.0)) + 4.0 * tr_p / (n1 * n2);
    (s1, s2)
}

fn mmd_point(spec: &ExperimentSpec, d: usize, n1: usize, n2: usize, seeds: SeedStream) -> Result<ResultRow> {
    let mu = vec![1.0 / (d as f64).sqrt(); d];
    let cov_p = paired_block_cov(d);
    let p_model = ModelSpec::new(Family::ExplicitGaussian { mean: vec![0.0; d], cov: cov_p.clone() }, d);
    let q_model = ModelSpec::shift_scale(mu.clone(), 1.0, Default::default());
    let (ps, qs) = (p_model.sampler(n1)?, q_model.sampler(n2)?);
    let mu2 = norm_sq(&mu);

    // centred U_MMD, its linear part and the remainder
    let draw = |s: u64| -> Result<[f64; 3]> {
        let mut rng = rng_from_seed(s);
        let x = ps.sample_matrix(n1, &mut rng);
        let y = qs.sample_matrix(n2, &mut rng);
        let (xb, yb) = (x.mean(), y.mean());
        let u = simple_u2(&x)? - 2.0 * dot(&xb, &yb) + simple_u2(&y)? - mu2;
        let l = 2.0 * (dot(&yb, &mu) - mu2) - 2.0 * dot(&xb, &mu);
        Ok([u, l, u - l])
    };
    let first = draws(spec.b, seeds.fork(0), draw)?;
    let second = draws(spec.b, seeds.fork(1), draw)?;
    let u = column(&first, 0);
    let (zu, zl, zq) = (column(&second, 0), column(&second, 1), column(&second, 2));

    let (c1, c2) = mmd_component_variances(&mu, &cov_p, n1, n2);
    let dominant_order = if c1 >= c2 { 1 } else { 2 };
    let dominant = if dominant_order == 1 { &zl } else { &zq };
    let full = kolmogorov_from_values(&u, &zu, spec.alpha)?;
    let dom = kolmogorov_from_values(&u, dominant, spec.alpha)?;
    let kurt = excess_kurtosis(&u)?;

    let mut r = ResultRow::new(NAME, "mmd", n1 + n2, d, spec.b);
    r.m = Some(2);
    r.mu_norm = Some(mu2.sqrt());
    r.n1 = Some(n1);
    r.n2 = Some(n2);
    r.distance = Some(full.distance);
    r.radius = Some(full.dkw_radius);
    r.distance_alt = Some(dom.distance);
    r.radius_alt = Some(dom.dkw_radius);
    r.var1 = Some(sample_variance(&zl));
    r.var2 = Some(sample_variance(&zq));
    r.closed1 = Some(c1);
    r.closed2 = Some(c2);
    r.rho = Some(c1.min(c2) / c1.max(c2));
    r.dominant_order = Some(dominant_order);
    r.kurtosis = Some(kurt.value);
    r.kurtosis_se = Some(kurt.se);
    r.verdict = verdict(full.distance, full.dkw_radius, dom.distance, dom.dkw_radius);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::super::{MuSpec, PhaseTransitionSpec};
    use super::*;
    use crate::datagen::CoordinateLaw;

    fn u2_spec(n: Vec<usize>, d: Vec<usize>, b: usize) -> ExperimentSpec {
        ExperimentSpec::new(
            ExperimentKind::PhaseTransition(PhaseTransitionSpec {
                u2: Some(U2Grid {
                    n,
                    d,
                    tau: vec![1.0],
                    mu: vec![MuSpec::FirstAxis { norm: 1.0 }],
                    coordinates: CoordinateLaw::Rademacher,
                }),
                mmd: None,
            }),
            b,
            11,
        )
    }

    #[test]
    fn mmd_closed_forms_at_imbalance() {
        let d = 100;
        let mu = vec![0.1; d];
        let (n1, n2) = (200, 400);
        let (c1, c2) = mmd_component_variances(&mu, &paired_block_cov(d), n1, n2);
        assert!((c1 - 4.0 / 400.0).abs() < 1e-14);
        let expect = 200.0 / (200.0 * 199.0) + 200.0 / (400.0 * 399.0) + 4.0 * (100.0 / 2f64.sqrt()) / 80_000.0;
        assert!((c2 - expect).abs() < 1e-14);
        assert!((c1 / c2 - 1.0).abs() < 0.05);
    }

    #[test]
    fn small_d_is_linear_dominated() {
        let t = phase_transition(&u2_spec(vec![50], vec![5], 2000)).unwrap();
        let r = &t.rows[0];
        assert_eq!(r.dominant_order, Some(2 - 1));
        assert!((r.closed1.unwrap() - 0.08).abs() < 1e-15);
        assert!((r.var1.unwrap() / r.closed1.unwrap() - 1.0).abs() < 0.1);
        assert!((r.var2.unwrap() / r.closed2.unwrap() - 1.0).abs() < 0.15);
        assert!(r.distance.unwrap() <= r.radius.unwrap());
    }

    #[test]
    fn verdicts_do_not_oscillate_along_dimension() {
        // n = 50, |mu| = 1: the dominant order switches near d = 2n = 100
        let t = phase_transition(&u2_spec(vec![50], vec![2, 10, 100, 1000, 4000], 1000)).unwrap();
        let orders: Vec<usize> = t.rows.iter().map(|r| r.dominant_order.unwrap()).collect();
        assert!(orders.windows(2).all(|w| w[0] <= w[1]), "{orders:?}");
        let tr: Vec<usize> =
            t.rows.iter().enumerate().filter(|(_, r)| r.verdict == Verdict::Transition).map(|(i, _)| i).collect();
        assert!(tr.windows(2).all(|w| w[1] == w[0] + 1), "transition rows not contiguous: {tr:?}");
        assert!(t.rows.iter().all(|r| r.verdict != Verdict::Failure));
    }

    #[test]
    fn bit_exact_rerun() {
        let s = u2_spec(vec![20], vec![3], 200);
        assert_eq!(phase_transition(&s).unwrap().to_csv_string(), phase_transition(&s).unwrap().to_csv_string());
    }
}
