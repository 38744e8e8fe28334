use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::tensor::SymmetricTensor;
use crate::datagen::{dot, norm_sq, rng_from_seed, DataMatrix};
use crate::error::{Error, Result};

/// Default cap on the number of ordered tuples enumerated by [`complete_u`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

fn need_rows(x: &DataMatrix, required: usize) -> Result<()> {
    if x.n() < required {
        Err(Error::TooFewRows { required, got: x.n() })
    } else {
        Ok(())
    }
}

/// `(n(n-1))^{-1} sum_{i != j} X_i^T X_j`, via `(|sum X_i|^2 - sum |X_i|^2) / (n(n-1))`.
pub fn simple_u2(x: &DataMatrix) -> Result<f64> {
    need_rows(x, 2)?;
    let n = x.n() as f64;
    let total = norm_sq(&x.column_sums());
    let diag: f64 = x.rows().map(norm_sq).sum();
    Ok((total - diag) / (n * (n - 1.0)))
}

/// `n^{-2} sum_{i,j} X_i^T X_j = |X̄|^2`.
pub fn simple_v2(x: &DataMatrix) -> f64 {
    norm_sq(&x.mean())
}

/// `n^{-m} sum_{i_1..i_m} <S, X_{i_1} ⊗ ... ⊗ X_{i_m}> = <S, X̄^{⊗m}>`.
pub fn tensor_v(x: &DataMatrix, s: &SymmetricTensor) -> Result<f64> {
    s.contract(&x.mean())
}

/// `n^{-1/2} sum_i X_{i,c}`.
pub fn scaled_average(x: &DataMatrix, coordinate: usize) -> Result<f64> {
    if coordinate >= x.d() {
        return Err(Error::DimensionMismatch { expected: coordinate + 1, got: x.d() });
    }
    Ok(x.rows().map(|r| r[coordinate]).sum::<f64>() / (x.n() as f64).sqrt())
}

/// `|sqrt(n) X̄|_{l_m}^m = sum_j |sqrt(n) X̄_j|^m`.
pub fn lm_norm_power(x: &DataMatrix, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("l_m norm needs m >= 1"));
    }
    let rt = (x.n() as f64).sqrt();
    Ok(x.mean().iter().map(|v| (rt * v).abs().powi(m as i32)).sum())
}

/// `p*_m = n^{-1/2} sum_i x_{i1} + (n^{-1/2} sum_i x_{i2})^m`.
pub fn pstar(x: &DataMatrix, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("p*_m needs m >= 1"));
    }
    if x.d() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x.d() });
    }
    let rt = (x.n() as f64).sqrt();
    let (mut a, mut b) = (0.0, 0.0);
    for r in x.rows() {
        a += r[0];
        b += r[1];
    }
    Ok(a / rt + (b / rt).powi(m as i32))
}

/// Number of ordered distinct `m`-tuples from `n` rows, `n (n-1) ... (n-m+1)`.
pub fn falling_factorial(n: usize, m: usize) -> u128 {
    (0..m).map(|k| n.saturating_sub(k) as u128).fold(1u128, |acc, v| acc.saturating_mul(v))
}

fn check_u_args(x: &DataMatrix, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("U-statistic degree must be >= 1"));
    }
    need_rows(x, m)
}

/// Exact degree-`m` U-statistic: average of the kernel over all ordered distinct tuples.
pub fn complete_u(x: &DataMatrix, kernel: &KernelSpec, m: usize, budget: u64) -> Result<f64> {
    check_u_args(x, m)?;
    if m == 2 && kernel.is_linear() {
        return simple_u2(x);
    }
    let tuples = falling_factorial(x.n(), m);
    if tuples > budget as u128 {
        return Err(Error::EnumerationBudget { tuples, budget });
    }
    let mut idx = vec![0usize; m];
    let mut used = vec![false; x.n()];
    let mut args: Vec<&[f64]> = vec![&[]; m];
    let mut sum = 0.0;
    // depth-first enumeration of injective maps [m] -> [n]
    fn walk<'a>(
        depth: usize,
        x: &'a DataMatrix,
        kernel: &KernelSpec,
        idx: &mut [usize],
        used: &mut [bool],
        args: &mut Vec<&'a [f64]>,
        sum: &mut f64,
    ) {
        if depth == idx.len() {
            *sum += kernel.eval(args);
            return;
        }
        for i in 0..x.n() {
            if used[i] {
                continue;
            }
            used[i] = true;
            idx[depth] = i;
            args[depth] = x.row(i);
            walk(depth + 1, x, kernel, idx, used, args, sum);
            used[i] = false;
        }
    }
    walk(0, x, kernel, &mut idx, &mut used, &mut args, &mut sum);
    Ok(sum / tuples as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncompleteU {
    pub value: f64,
    pub tuples: u64,
}

/// Unbiased incomplete U-statistic: average over `tuples` ordered distinct tuples drawn
/// uniformly with replacement.
pub fn incomplete_u(x: &DataMatrix, kernel: &KernelSpec, m: usize, tuples: u64, seed: u64) -> Result<IncompleteU> {
    check_u_args(x, m)?;
    if tuples == 0 {
        return Err(Error::domain("incomplete U-statistic needs at least one tuple"));
    }
    let n = x.n();
    let mut rng = rng_from_seed(seed);
    let mut idx = Vec::with_capacity(m);
    let mut sum = 0.0;
    for _ in 0..tuples {
        idx.clear();
        while idx.len() < m {
            let i = rng.random_range(0..n);
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let args: Vec<&[f64]> = idx.iter().map(|&i| x.row(i)).collect();
        sum += kernel.eval(&args);
    }
    Ok(IncompleteU { value: sum / tuples as f64, tuples })
}

/// `(n(n-1))^{-1} sum_{i != j} kappa(X_i, X_j)` for any two-argument kernel.
pub(crate) fn pair_u(x: &DataMatrix, kernel: &KernelSpec) -> Result<f64> {
    need_rows(x, 2)?;
    if kernel.is_linear() {
        return simple_u2(x);
    }
    let n = x.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += kernel.eval2(x.row(i), x.row(j));
        }
    }
    // symmetric kernel: each unordered pair stands for two ordered ones
    Ok(2.0 * sum / (n as f64 * (n as f64 - 1.0)))
}

/// `(n_1 n_2)^{-1} sum_{i,j} kappa(X_i, Y_j)`.
pub(crate) fn cross_mean(x: &DataMatrix, y: &DataMatrix, kernel: &KernelSpec) -> f64 {
    let denom = (x.n() * y.n()) as f64;
    if kernel.is_linear() {
        return dot(&x.column_sums(), &y.column_sums()) / denom;
    }
    let mut sum = 0.0;
    for a in x.rows() {
        for b in y.rows() {
            sum += kernel.eval2(a, b);
        }
    }
    sum / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::SeedStream;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = SeedStream::new(seed).rng(0);
        DataMatrix::new(n, d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    fn brute_u2(x: &DataMatrix) -> f64 {
        let n = x.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += dot(x.row(i), x.row(j));
                }
            }
        }
        s / (n * (n - 1)) as f64
    }

    #[test]
    fn u2_examples() {
        let x = DataMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(simple_u2(&x).unwrap(), 0.0);
        let x = DataMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0], [2.0, 0.0]]).unwrap();
        assert!((simple_u2(&x).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let x = random_matrix(5, 3, 1);
        assert!((simple_u2(&x).unwrap() - brute_u2(&x)).abs() < 1e-12);
        let one = DataMatrix::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(simple_u2(&one), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn v2_examples() {
        assert_eq!(simple_v2(&DataMatrix::from_rows(&[[3.0, 4.0]]).unwrap()), 25.0);
        assert_eq!(simple_v2(&DataMatrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap()), 0.0);
        let x = random_matrix(4, 3, 2);
        let mut s = 0.0;
        for a in x.rows() {
            for b in x.rows() {
                s += dot(a, b);
            }
        }
        assert!((simple_v2(&x) - s / 16.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_v_examples() {
        let x = DataMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let s = SymmetricTensor::dense(2, 1, vec![1.0]).unwrap();
        assert_eq!(tensor_v(&x, &s).unwrap(), 4.0);
        let x = DataMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let s = SymmetricTensor::diagonal(2, vec![0.5, 0.5]).unwrap();
        assert_eq!(tensor_v(&x, &s).unwrap(), 2.5);
        let s3 = SymmetricTensor::diagonal(2, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(tensor_v(&x, &s3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn complete_u_examples() {
        let x = random_matrix(7, 3, 3);
        let e = complete_u(&x, &KernelSpec::callback(|a| dot(a[0], a[1])), 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!((e - simple_u2(&x).unwrap()).abs() < 1e-12);
        let c = KernelSpec::callback(|_| 2.5);
        assert!((complete_u(&x, &c, 3, DEFAULT_ENUMERATION_BUDGET).unwrap() - 2.5).abs() < 1e-15);
        let big = random_matrix(200, 1, 4);
        assert!(matches!(
            complete_u(&big, &KernelSpec::LinearInner, 4, DEFAULT_ENUMERATION_BUDGET),
            Err(Error::EnumerationBudget { .. })
        ));
        assert!(matches!(complete_u(&x, &KernelSpec::LinearInner, 8, 100), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn incomplete_u_is_close_to_complete() {
        let x = random_matrix(12, 2, 5);
        let k = KernelSpec::LinearInner;
        let exact = complete_u(&x, &k, 3, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let inc = incomplete_u(&x, &k, 3, 200_000, 6).unwrap();
        assert_eq!(inc.tuples, 200_000);
        assert!((inc.value - exact).abs() < 0.05, "{} vs {exact}", inc.value);
    }

    #[test]
    fn pstar_examples() {
        assert_eq!(pstar(&DataMatrix::from_rows(&[[3.0, 2.0]]).unwrap(), 2).unwrap(), 7.0);
        assert_eq!(pstar(&DataMatrix::new(3, 2, vec![0.0; 6]).unwrap(), 4).unwrap(), 0.0);
        let x = random_matrix(4, 2, 7);
        // independent path: explicit sums over column slices
        let c0: f64 = (0..4).map(|i| x.get(i, 0)).sum();
        let c1: f64 = (0..4).map(|i| x.get(i, 1)).sum();
        let expect = c0 / 2.0 + (c1 / 2.0) * (c1 / 2.0) * (c1 / 2.0);
        assert!((pstar(&x, 3).unwrap() - expect).abs() < 1e-12);
        assert!(pstar(&DataMatrix::from_rows(&[[1.0]]).unwrap(), 2).is_err());
    }

    proptest! {
        #[test]
        fn u_v_duality(n in 2usize..8, d in 1usize..4, seed in any::<u64>()) {
            let x = random_matrix(n, d, seed);
            let nf = n as f64;
            let lhs = nf * nf * simple_v2(&x);
            let rhs = nf * (nf - 1.0) * simple_u2(&x).unwrap() + x.rows().map(norm_sq).sum::<f64>();
            prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }

        #[test]
        fn permutation_invariance(n in 3usize..7, seed in any::<u64>()) {
            let x = random_matrix(n, 2, seed);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.rotate_left(1);
            perm.swap(0, n - 1);
            let y = x.permute_rows(&perm);
            let s = SymmetricTensor::diagonal(3, vec![1.0, -0.5]).unwrap();
            let k = KernelSpec::PolynomialInner { degree: 2, offset: 1.0 };
            prop_assert!((simple_u2(&x).unwrap() - simple_u2(&y).unwrap()).abs() < 1e-13);
            prop_assert!((simple_v2(&x) - simple_v2(&y)).abs() < 1e-14);
            prop_assert!((tensor_v(&x, &s).unwrap() - tensor_v(&y, &s).unwrap()).abs() < 1e-13);
            prop_assert!((complete_u(&x, &k, 3, 10_000).unwrap() - complete_u(&y, &k, 3, 10_000).unwrap()).abs() < 1e-11);
            prop_assert!((pstar(&x, 2).unwrap() - pstar(&y, 2).unwrap()).abs() < 1e-13);
        }
    }
}
