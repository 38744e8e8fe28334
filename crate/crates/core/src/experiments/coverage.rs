use super::{
    column, draws, kind_mismatch, sample_variance, CoverageStudy, ExperimentKind, ExperimentSpec, KurtosisStudy,
    PluginStudy, ResultRow, ResultTable, Verdict,
};
use crate::datagen::{norm_sq, rng_from_seed, GaussianSampler, ModelSpec, RowSampler, SeedStream};
use crate::empirics::{dkw_radius, excess_kurtosis, kolmogorov_from_values};
use crate::error::Result;
use crate::statistics::{lm_norm_power, plugin_components, simple_v2, PluginForm};

const NAME: &str = "gaussianity_and_coverage";

/// Sub-studies, each enabled by its own section of the spec:
///
/// - `kurtosis`: excess kurtosis of `n v_2(Z)` against the chi-square value `12/d`;
/// - `coverage`: `sup_r |P(|S_n|_m^m <= r) - P(|S_n^Z|_m^m <= r)|` over a quantile grid of radii;
/// - `plugin`: law of `g(X̄) - sum_l E g_l` for `g(x) = x^T x` against the Gaussian law
///   of its dominant Taylor component, plus the two relative error terms.
pub fn gaussianity_and_coverage(spec: &ExperimentSpec) -> Result<ResultTable> {
    let ExperimentKind::GaussianityAndCoverage(p) = &spec.kind else {
        return Err(kind_mismatch(NAME, spec));
    };
    spec.validate()?;
    let root = SeedStream::new(spec.seed());
    let mut rows = Vec::new();
    if let Some(k) = &p.kurtosis {
        kurtosis_rows(spec, k, root.fork(0), &mut rows)?;
    }
    if let Some(c) = &p.coverage {
        coverage_rows(spec, c, root.fork(1), &mut rows)?;
    }
    if let Some(g) = &p.plugin {
        plugin_rows(spec, g, root.fork(2), &mut rows)?;
    }
    Ok(ResultTable { experiment: NAME.to_string(), rows })
}

fn kurtosis_rows(spec: &ExperimentSpec, k: &KurtosisStudy, seeds: SeedStream, rows: &mut Vec<ResultRow>) -> Result<()> {
    let n = k.n;
    for (g, &d) in k.d.iter().enumerate() {
        let sampler = ModelSpec::isotropic_gaussian(d).sampler(n)?;
        let v = draws(spec.b, seeds.fork(g as u64), |s| {
            Ok(n as f64 * simple_v2(&sampler.sample_matrix(n, &mut rng_from_seed(s))))
        })?;
        let kurt = excess_kurtosis(&v)?;
        let mut r = ResultRow::new(NAME, "kurtosis", n, d, spec.b);
        r.m = Some(2);
        r.kurtosis = Some(kurt.value);
        r.kurtosis_se = Some(kurt.se);
        r.kurtosis_target = Some(12.0 / d as f64);
        r.verdict =
            if kurt.value.abs() <= k.threshold + 3.0 * kurt.se { Verdict::Universal } else { Verdict::Failure };
        rows.push(r);
    }
    Ok(())
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn ecdf_sorted(s: &[f64], t: f64) -> f64 {
    s.partition_point(|v| *v <= t) as f64 / s.len() as f64
}

/// `max_k |F_x(r_k) - F_z(r_k)|` over the radii `r_k` at the `k/(R+1)` quantiles of `z`.
pub(crate) fn coverage_gap(x: Vec<f64>, z: Vec<f64>, radii: usize) -> f64 {
    let (x, z) = (sorted(x), sorted(z));
    (1..=radii)
        .map(|k| {
            let q = k as f64 / (radii + 1) as f64;
            let idx = ((q * z.len() as f64).ceil() as usize).clamp(1, z.len()) - 1;
            let r = z[idx];
            (ecdf_sorted(&x, r) - ecdf_sorted(&z, r)).abs()
        })
        .fold(0.0, f64::max)
}

fn coverage_rows(spec: &ExperimentSpec, c: &CoverageStudy, seeds: SeedStream, rows: &mut Vec<ResultRow>) -> Result<()> {
    let radius = 2.0 * dkw_radius(spec.b, spec.alpha);
    let mut g = 0u64;
    for &n in &c.n {
        for &d in &c.d {
            for &m in &c.m {
                let s = seeds.fork(g);
                g += 1;
                let data = ModelSpec::shift_scale(vec![0.0; d], 1.0, c.coordinates).sampler(n)?;
                let gauss = ModelSpec::isotropic_gaussian(d).sampler(n)?;
                let law = |sampler: &dyn RowSampler, stream: SeedStream| {
                    draws(spec.b, stream, |seed| lm_norm_power(&sampler.sample_matrix(n, &mut rng_from_seed(seed)), m))
                };
                let gap = coverage_gap(law(&data, s.fork(0))?, law(&gauss, s.fork(1))?, c.radii);
                let mut r = ResultRow::new(NAME, "coverage", n, d, spec.b);
                r.m = Some(m);
                r.distance = Some(gap);
                r.radius = Some(radius);
                r.verdict = if gap <= c.tolerance + radius { Verdict::Universal } else { Verdict::Failure };
                rows.push(r);
            }
        }
    }
    Ok(())
}

fn plugin_rows(spec: &ExperimentSpec, p: &PluginStudy, seeds: SeedStream, rows: &mut Vec<ResultRow>) -> Result<()> {
    let mut g = 0u64;
    for &n in &p.n {
        for &d in &p.d {
            for &tau in &p.tau {
                for mu_spec in &p.mu {
                    let s = seeds.fork(g);
                    g += 1;
                    let mu = mu_spec.vector(d, n, tau);
                    let model = ModelSpec::shift_scale(mu.clone(), tau, p.coordinates);
                    let data = model.sampler(n)?;
                    let gauss = GaussianSampler::new(&model.population_moments(n)?)?;
                    let comps = |sampler: &dyn RowSampler, stream: SeedStream| {
                        draws(spec.b, stream, |seed| {
                            let x = sampler.sample_matrix(n, &mut rng_from_seed(seed));
                            let c = plugin_components(&x, &PluginForm::GToy, &mu)?;
                            Ok([c.total, c.components[1], c.components[2], c.remainder])
                        })
                    };
                    let x = comps(&data, s.fork(0))?;
                    let z = comps(&gauss, s.fork(1))?;
                    rows.push(plugin_row(spec, n, &mu, tau, &x, &z)?);
                }
            }
        }
    }
    Ok(())
}

fn plugin_row(spec: &ExperimentSpec, n: usize, mu: &[f64], tau: f64, x: &[[f64; 4]], z: &[[f64; 4]]) -> Result<ResultRow> {
    let (d, nf) = (mu.len(), n as f64);
    let mu2 = norm_sq(mu);
    // E g_0 = |mu|^2, E g_1 = 0, E g_2 = tau^2 d / n
    let means = [mu2, 0.0, tau * tau * d as f64 / nf];
    let (g1, g2, rem) = (column(x, 1), column(x, 2), column(x, 3));
    let (v1, v2, vr) = (sample_variance(&g1), sample_variance(&g2), sample_variance(&rem));
    let dominant = if v1 >= v2 { 1 } else { 2 };
    let centred: Vec<f64> = x.iter().map(|r| r[0] - means.iter().sum::<f64>()).collect();
    let reference: Vec<f64> = z.iter().map(|r| r[dominant] - means[dominant]).collect();
    let ks = kolmogorov_from_values(&centred, &reference, spec.alpha)?;
    let vm = if dominant == 1 { v1 } else { v2 };
    // below the dominant order: order 1 when M = 2; above: order 2 when M = 1, plus the remainder
    let (lower, above) = if dominant == 2 { (v1, vr) } else { (0.0, sample_variance(&sum_cols(&g2, &rem))) };

    let mut r = ResultRow::new(NAME, "plugin", n, d, spec.b);
    r.m = Some(2);
    r.tau = Some(tau);
    r.mu_norm = Some(mu2.sqrt());
    r.distance = Some(ks.distance);
    r.radius = Some(ks.dkw_radius);
    r.var1 = Some(v1);
    r.var2 = Some(v2);
    r.closed1 = Some(4.0 * tau * tau * mu2 / nf);
    r.closed2 = Some(2.0 * tau.powi(4) * d as f64 / (nf * nf));
    r.rho = Some(if vm > 0.0 { lower / vm } else { f64::NAN });
    r.remainder = Some(if vm > 0.0 { above / vm } else { f64::NAN });
    r.dominant_order = Some(dominant);
    r.verdict = if ks.distance <= ks.dkw_radius { Verdict::Universal } else { Verdict::Failure };
    Ok(r)
}

fn sum_cols(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[cfg(test)]
mod tests {
    use super::super::{CoverageSpec, MuSpec};
    use super::*;
    use crate::datagen::CoordinateLaw;

    fn spec(p: CoverageSpec, b: usize) -> ExperimentSpec {
        ExperimentSpec::new(ExperimentKind::GaussianityAndCoverage(p), b, 17)
    }

    #[test]
    fn gap_of_identical_samples_is_zero() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        assert_eq!(coverage_gap(v.clone(), v, 50), 0.0);
        assert_eq!(coverage_gap(vec![2.0, 2.0], vec![1.0, 1.0], 3), 1.0);
    }

    #[test]
    fn centred_gtoy_is_second_order() {
        let p = CoverageSpec {
            plugin: Some(PluginStudy {
                n: vec![40],
                d: vec![5],
                tau: vec![1.0],
                mu: vec![MuSpec::Zero],
                coordinates: CoordinateLaw::Rademacher,
            }),
            ..Default::default()
        };
        let t = gaussianity_and_coverage(&spec(p, 500)).unwrap();
        let r = &t.rows[0];
        assert_eq!(r.dominant_order, Some(2));
        assert_eq!(r.rho, Some(0.0));
        assert_eq!(r.remainder, Some(0.0));
        assert_eq!(r.var1, Some(0.0));
    }

    #[test]
    fn chi_square_one_kurtosis() {
        let p = CoverageSpec { kurtosis: Some(KurtosisStudy { n: 3, d: vec![1], threshold: 0.1 }), ..Default::default() };
        let r = &gaussianity_and_coverage(&spec(p, 100_000)).unwrap().rows[0];
        assert!((r.kurtosis.unwrap() - 12.0).abs() < 2.0);
        assert_eq!(r.verdict, Verdict::Failure);
    }
}
