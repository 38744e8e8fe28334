use super::{draws, kind_mismatch, ExperimentKind, ExperimentSpec, ResultRow, ResultTable, Verdict};
use crate::bounds::lower_upper_rates;
use crate::datagen::{rng_from_seed, GaussianSampler, HeavyTailParams, ModelSpec, RowSampler, SeedStream};
use crate::empirics::{dkw_radius, ecdf_eval};
use crate::error::Result;
use crate::statistics::pstar;

const NAME: &str = "lower_bound_gap";

/// Least-squares slope of `ln y` against `ln x`; `None` when some `y <= 0` or fewer
/// than two distinct `x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Per sample size: `G(n) = |F_X(-2 sigma_n) - F_Z(-2 sigma_n)|` for `p*_m` under the
/// heavy-tailed bivariate sampler versus its Gaussian surrogate, with the two-sample
/// DKW radius, the Gaussian-coordinate control (`distance_alt`), the lower/upper rate
/// functionals and the fitted log-log slope of `G` (same value on every row).
pub fn lower_bound_gap(spec: &ExperimentSpec) -> Result<ResultTable> {
    let ExperimentKind::LowerBoundGap(p) = &spec.kind else {
        return Err(kind_mismatch(NAME, spec));
    };
    spec.validate()?;
    let root = SeedStream::new(spec.seed());
    let model = ModelSpec::heavy_tail_bivariate(p.nu, p.sigma0, p.m);
    let radius = 2.0 * dkw_radius(spec.b, spec.alpha);
    let mut rows = Vec::new();
    for (g, &n) in p.n.iter().enumerate() {
        let seeds = root.fork(g as u64);
        let h = HeavyTailParams::for_sample_size(p.nu, p.sigma0, n)?;
        let t = -2.0 * h.sigma;
        let heavy = model.sampler(n)?;
        let gauss = GaussianSampler::new(&model.population_moments(n)?)?;
        let law = |sampler: &dyn RowSampler, stream: SeedStream| {
            draws(spec.b, stream, |s| pstar(&sampler.sample_matrix(n, &mut rng_from_seed(s)), p.m))
        };
        let x = law(&heavy, seeds.fork(0))?;
        let z = law(&gauss, seeds.fork(1))?;
        let fz = ecdf_eval(&z, t);
        let gap = (ecdf_eval(&x, t) - fz).abs();
        let rates = lower_upper_rates(n, p.m, p.nu)?;

        let mut r = ResultRow::new(NAME, "pstar", n, 2, spec.b);
        r.m = Some(p.m);
        r.nu = Some(p.nu);
        r.distance = Some(gap);
        r.radius = Some(radius);
        if p.control {
            let c = law(&gauss, seeds.fork(2))?;
            r.distance_alt = Some((ecdf_eval(&c, t) - fz).abs());
            r.radius_alt = Some(radius);
        }
        r.bound_lower = Some(rates.lower);
        r.bound_upper = Some(rates.upper);
        r.verdict = if gap > radius { Verdict::Failure } else { Verdict::Universal };
        rows.push(r);
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let gs: Vec<f64> = rows.iter().map(|r| r.distance.unwrap_or(0.0)).collect();
    let slope = log_log_slope(&ns, &gs);
    for r in &mut rows {
        r.slope = Some(slope.unwrap_or(f64::NAN));
    }
    Ok(ResultTable { experiment: NAME.to_string(), rows })
}

#[cfg(test)]
mod tests {
    use super::super::LowerBoundSpec;
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.25)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.25).abs() < 1e-12);
        assert!(log_log_slope(&x, &[1.0, 0.0, 1.0]).is_none());
        assert!(log_log_slope(&[5.0, 5.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn small_run_reports_every_column() {
        let spec = ExperimentSpec::new(
            ExperimentKind::LowerBoundGap(LowerBoundSpec { n: vec![16, 64], nu: 3.0, sigma0: 1.0, m: 2, control: true }),
            2000,
            3,
        );
        let t = lower_bound_gap(&spec).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            assert!(r.radius.unwrap() > 0.0 && r.distance_alt.is_some() && r.slope.is_some());
            assert!(r.bound_lower.unwrap() < r.bound_upper.unwrap());
            // control law equals the reference law
            assert!(r.distance_alt.unwrap() <= r.radius_alt.unwrap());
        }
    }

    #[test]
    fn odd_degree_rejected() {
        let spec = ExperimentSpec::new(
            ExperimentKind::LowerBoundGap(LowerBoundSpec { n: vec![16], nu: 3.0, sigma0: 1.0, m: 3, control: false }),
            10,
            0,
        );
        assert!(lower_bound_gap(&spec).is_err());
    }
}
