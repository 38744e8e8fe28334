use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::SeedStream;
use crate::error::{Error, Result};

pub type KernelFn = dyn Fn(&[&[f64]]) -> f64 + Send + Sync;

/// Symmetric kernel `u(y_1, ..., y_m)` of a U-statistic.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `sum_l prod_k y_{k,l}`; for `m = 2` this is `y_1^T y_2`.
    LinearInner,
    /// `(sum_l prod_k y_{k,l} + offset)^degree`.
    PolynomialInner { degree: u32, offset: f64 },
    /// User-supplied symmetric function of the `m` arguments.
    #[serde(skip)]
    Callback(Arc<KernelFn>),
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::LinearInner => f.write_str("LinearInner"),
            KernelSpec::PolynomialInner { degree, offset } => {
                f.debug_struct("PolynomialInner").field("degree", degree).field("offset", offset).finish()
            }
            KernelSpec::Callback(_) => f.write_str("Callback(..)"),
        }
    }
}

#[inline]
pub(crate) fn multilinear_inner(args: &[&[f64]]) -> f64 {
    let d = args[0].len();
    (0..d).map(|l| args.iter().map(|a| a[l]).product::<f64>()).sum()
}

impl KernelSpec {
    pub fn callback<F>(f: F) -> Self
    where
        F: Fn(&[&[f64]]) -> f64 + Send + Sync + 'static,
    {
        KernelSpec::Callback(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        match self {
            KernelSpec::LinearInner => multilinear_inner(args),
            KernelSpec::PolynomialInner { degree, offset } => (multilinear_inner(args) + offset).powi(*degree as i32),
            KernelSpec::Callback(f) => f(args),
        }
    }

    /// Two-argument convenience form.
    #[inline]
    pub fn eval2(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::LinearInner => crate::datagen::dot(x, y),
            _ => self.eval(&[x, y]),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::LinearInner)
    }

    /// Spot-checks symmetry on random inputs by comparing every argument
    /// permutation reached through adjacent swaps.
    pub fn check_symmetry(&self, d: usize, m: usize, trials: usize, seed: u64) -> Result<()> {
        let stream = SeedStream::new(seed);
        for t in 0..trials {
            let mut rng = stream.rng(t as u64);
            let pts: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let base: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let reference = self.eval(&base);
            for k in 0..m.saturating_sub(1) {
                let mut swapped = base.clone();
                swapped.swap(k, k + 1);
                let v = self.eval(&swapped);
                if (v - reference).abs() > 1e-9 * reference.abs().max(1.0) {
                    return Err(Error::domain(format!(
                        "kernel is not symmetric: swapping arguments {k} and {} changes {reference} to {v}",
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_kernel_values() {
        let k = KernelSpec::LinearInner;
        assert_eq!(k.eval(&[&[1.0, 2.0], &[3.0, 4.0]]), 11.0);
        assert_eq!(k.eval(&[&[1.0, 2.0], &[3.0, 4.0], &[2.0, 0.5]]), 10.0);
        let p = KernelSpec::PolynomialInner { degree: 2, offset: 1.0 };
        assert_eq!(p.eval2(&[1.0, 2.0], &[3.0, 4.0]), 144.0);
    }

    #[test]
    fn symmetry_checks() {
        assert!(KernelSpec::LinearInner.check_symmetry(3, 3, 10, 1).is_ok());
        let asym = KernelSpec::callback(|a| a[0][0] - a[1][0]);
        assert!(asym.check_symmetry(2, 2, 5, 1).is_err());
    }

    #[test]
    fn callback_is_not_serialized() {
        assert!(serde_json::to_string(&KernelSpec::callback(|_| 1.0)).is_err());
        let k: KernelSpec = serde_json::from_str(r#"{"kind":"polynomial_inner","degree":3,"offset":0.5}"#).unwrap();
        assert!(matches!(k, KernelSpec::PolynomialInner { degree: 3, .. }));
    }
}
