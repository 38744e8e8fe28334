use serde::{Deserialize, Serialize};

use super::replication::ReplicationSet;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// One-sample DKW radius `sqrt(ln(2/alpha) / (2B))`.
pub fn dkw_radius(b: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * b as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KolmogorovEstimate {
    pub distance: f64,
    /// Sum of the two one-sample DKW radii.
    pub dkw_radius: f64,
    pub alpha: f64,
}

impl KolmogorovEstimate {
    pub fn exceeds_radius(&self) -> bool {
        self.distance > self.dkw_radius
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

/// Exact `sup_t |F_a(t) - F_b(t)|` by a sorted merge. Both empirical CDFs are
/// evaluated after absorbing every sample equal to the current threshold, so
/// ties across the two samples never produce spurious jumps.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sample for Kolmogorov distance"));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

pub fn kolmogorov_distance(a: &ReplicationSet, b: &ReplicationSet, alpha: f64) -> Result<KolmogorovEstimate> {
    kolmogorov_from_values(&a.values, &b.values, alpha)
}

pub(crate) fn kolmogorov_from_values(a: &[f64], b: &[f64], alpha: f64) -> Result<KolmogorovEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(KolmogorovEstimate {
        distance: ks_distance(a, b)?,
        dkw_radius: dkw_radius(a.len(), alpha) + dkw_radius(b.len(), alpha),
        alpha,
    })
}

/// `sup_t |F_a(t) - F(t)|` against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("sample for Kolmogorov distance"));
    }
    let s = sorted(a);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0, |sup, (k, x)| {
        let f = cdf(*x);
        sup.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n)
    }))
}

/// Right-continuous empirical CDF `#{a_i <= t} / B`.
pub fn ecdf_eval(a: &[f64], t: f64) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().filter(|v| **v <= t).count() as f64 / a.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kurtosis {
    pub value: f64,
    /// `sqrt(24 / B)`, the Gaussian-case standard error.
    pub se: f64,
}

/// Plug-in excess kurtosis `m_4 / m_2^2 - 3`.
pub fn excess_kurtosis(a: &[f64]) -> Result<Kurtosis> {
    if a.len() < 2 {
        return Err(Error::Empty("sample for kurtosis"));
    }
    let b = a.len() as f64;
    let mean = a.iter().sum::<f64>() / b;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in a {
        let c = (v - mean) * (v - mean);
        m2 += c;
        m4 += c * c;
    }
    m2 /= b;
    m4 /= b;
    if m2 <= 0.0 {
        return Err(Error::DegenerateDenominator("sample variance is zero".into()));
    }
    Ok(Kurtosis { value: m4 / (m2 * m2) - 3.0, se: (24.0 / b).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{SeedStream, SimRng};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn normals(rng: &mut SimRng, b: usize) -> Vec<f64> {
        (0..b).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn distance_examples() {
        let a = [0.3, -1.0, 2.0];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&[0.0], &[1.0]).unwrap(), 1.0);
        // ties across samples: F_a = F_b except between 1 and 2
        assert!((ks_distance(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(ks_distance(&[], &[1.0]).is_err());
    }

    #[test]
    fn dkw_radius_at_1e5() {
        let r = dkw_radius(100_000, 0.05) * 2.0;
        assert!((r - 0.00859).abs() < 1e-4);
    }

    #[test]
    fn independent_normals_fall_inside_radius() {
        let stream = SeedStream::new(31);
        let trials = 200;
        let b = 100_000;
        let inside = (0..trials)
            .filter(|t| {
                let mut rng = stream.rng(*t);
                let (x, y) = (normals(&mut rng, b), normals(&mut rng, b));
                let k = kolmogorov_from_values(&x, &y, 0.05).unwrap();
                k.distance <= k.dkw_radius
            })
            .count();
        assert!(inside as f64 >= 0.93 * trials as f64, "{inside}/{trials}");
    }

    #[test]
    fn one_sample_dkw_coverage() {
        let stream = SeedStream::new(32);
        let normal = Normal::standard();
        let (trials, b) = (200, 2_000);
        let inside = (0..trials)
            .filter(|t| {
                let x = normals(&mut stream.rng(*t), b);
                ks_one_sample(&x, |v| normal.cdf(v)).unwrap() <= dkw_radius(b, 0.05)
            })
            .count();
        // the radius is the asymptotic 95% Kolmogorov quantile, so coverage sits at ~95%;
        // allow three binomial standard deviations over 200 trials
        let slack = 3.0 * (trials as f64 * 0.05 * 0.95).sqrt();
        assert!(inside as f64 >= 0.95 * trials as f64 - slack, "{inside}/{trials}");
    }

    #[test]
    fn kurtosis_examples() {
        let mut rng = SeedStream::new(33).rng(0);
        let z = normals(&mut rng, 1_000_000);
        assert!(excess_kurtosis(&z).unwrap().value.abs() < 0.05);
        let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
        assert!((excess_kurtosis(&z2).unwrap().value - 12.0).abs() < 0.5);
        assert!(matches!(excess_kurtosis(&[2.0; 10]), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn ecdf_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ecdf_eval(&a, 0.0), 0.0);
        assert_eq!(ecdf_eval(&a, 9.0), 1.0);
        assert!((ecdf_eval(&a, 2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn symmetric_and_triangle(
            a in proptest::collection::vec(-3i32..3, 1..30),
            b in proptest::collection::vec(-3i32..3, 1..30),
            c in proptest::collection::vec(-3i32..3, 1..30),
        ) {
            let f = |v: &Vec<i32>| v.iter().map(|x| *x as f64 * 0.5).collect::<Vec<f64>>();
            let (a, b, c) = (f(&a), f(&b), f(&c));
            let ab = ks_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, ks_distance(&b, &a).unwrap());
            prop_assert!(ab <= ks_distance(&a, &c).unwrap() + ks_distance(&c, &b).unwrap() + 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn merge_matches_grid_evaluation(
            a in proptest::collection::vec(-5i32..5, 1..20),
            b in proptest::collection::vec(-5i32..5, 1..20),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = (a.iter().map(|x| *x as f64).collect(), b.iter().map(|x| *x as f64).collect());
            let grid = (-6..=6).map(|t| (ecdf_eval(&a, t as f64) - ecdf_eval(&b, t as f64)).abs()).fold(0.0, f64::max);
            prop_assert!((ks_distance(&a, &b).unwrap() - grid).abs() < 1e-12);
        }
    }
}
