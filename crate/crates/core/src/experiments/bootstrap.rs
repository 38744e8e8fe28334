use rand::Rng;
use rayon::prelude::*;

use super::{draws, kind_mismatch, median, BootstrapSpec, ExperimentKind, ExperimentSpec, ResultRow, ResultTable, Verdict};
use crate::datagen::{norm_sq, rng_from_seed, DataMatrix, ModelSpec, RowSampler, SeedStream};
use crate::empirics::{dkw_radius, kolmogorov_from_values};
use crate::error::Result;
use crate::statistics::simple_u2;

const NAME: &str = "bootstrap_consistency";

/// `b` draws of `(U1 - |X̄|^2, U2)` where `U1 = u_2(X*)` and `U2 = u_2(X* - X̄)` share
/// the resampled indices. Both are centred at their conditional means given `X`.
fn conditional_draws(x: &DataMatrix, b: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.n(), x.d());
    let mean = x.mean();
    let norms: Vec<f64> = x.rows().map(norm_sq).collect();
    let centred_norms: Vec<f64> =
        x.rows().map(|r| r.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum()).collect();
    let nf = n as f64;
    let scale = 1.0 / (nf * (nf - 1.0));
    let shift = norm_sq(&mean);
    let mut rng = rng_from_seed(seed);
    let mut sum = vec![0.0; d];
    let (mut u1, mut u2) = (Vec::with_capacity(b), Vec::with_capacity(b));
    for _ in 0..b {
        sum.iter_mut().for_each(|s| *s = 0.0);
        let (mut sq, mut csq) = (0.0, 0.0);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            for (s, v) in sum.iter_mut().zip(x.row(i)) {
                *s += v;
            }
            sq += norms[i];
            csq += centred_norms[i];
        }
        let total = norm_sq(&sum);
        let centred_total: f64 = sum.iter().zip(&mean).map(|(s, m)| (s - nf * m).powi(2)).sum();
        u1.push((total - sq) * scale - shift);
        u2.push((centred_total - csq) * scale);
    }
    (u1, u2)
}

/// Per grid point and data replication: Kolmogorov distance between the conditional
/// law of each centred bootstrap estimator given `X` and the unconditional centred law
/// of `u_2(X)`. Two rows per grid point (`u1`: plain resampling, `u2`: resampling the
/// centred data) carrying the median distance over data replications.
pub fn bootstrap_consistency(spec: &ExperimentSpec) -> Result<ResultTable> {
    let ExperimentKind::BootstrapConsistency(p) = &spec.kind else {
        return Err(kind_mismatch(NAME, spec));
    };
    spec.validate()?;
    let root = SeedStream::new(spec.seed());
    let mut rows = Vec::new();
    let mut g = 0u64;
    for &n in &p.n {
        for &d in &p.d {
            for &tau in &p.tau {
                for mu in &p.mu {
                    let mu = mu.vector(d, n, tau);
                    rows.extend(point(spec, p, n, mu, tau, root.fork(g))?);
                    g += 1;
                }
            }
        }
    }
    Ok(ResultTable { experiment: NAME.to_string(), rows })
}

fn point(spec: &ExperimentSpec, p: &BootstrapSpec, n: usize, mu: Vec<f64>, tau: f64, seeds: SeedStream) -> Result<[ResultRow; 2]> {
    let d = mu.len();
    let model = ModelSpec::shift_scale(mu.clone(), tau, p.coordinates);
    let sampler = model.sampler(n)?;
    let mu2 = norm_sq(&mu);
    let b_ref = p.reference_b.unwrap_or(spec.b);

    let reference = draws(b_ref, seeds.fork(0), |s| Ok(simple_u2(&sampler.sample_matrix(n, &mut rng_from_seed(s)))? - mu2))?;
    let data = seeds.fork(1);
    let resamples = seeds.fork(2);
    let ks: Vec<(f64, f64)> = (0..p.data_replications as u64)
        .into_par_iter()
        .map(|r| {
            let x = sampler.sample_matrix(n, &mut rng_from_seed(data.derive(r)));
            let (u1, u2) = conditional_draws(&x, spec.b, resamples.derive(r));
            let k1 = kolmogorov_from_values(&u1, &reference, spec.alpha)?.distance;
            let k2 = kolmogorov_from_values(&u2, &reference, spec.alpha)?.distance;
            Ok((k1, k2))
        })
        .collect::<Result<_>>()?;
    let radius = dkw_radius(spec.b, spec.alpha) + dkw_radius(b_ref, spec.alpha);

    let row = |study: &str, values: Vec<f64>| {
        let med = median(values);
        let mut r = ResultRow::new(NAME, study, n, d, spec.b);
        r.m = Some(2);
        r.tau = Some(tau);
        r.mu_norm = Some(mu2.sqrt());
        r.distance = Some(med);
        r.radius = Some(radius);
        r.verdict = if med <= p.consistent_threshold { Verdict::Consistent } else { Verdict::Inconsistent };
        r
    };
    Ok([row("u1", ks.iter().map(|k| k.0).collect()), row("u2", ks.iter().map(|k| k.1).collect())])
}
