use super::kernel::KernelSpec;
use super::ustat::{cross_mean, pair_u};
use crate::datagen::DataMatrix;
use crate::error::{Error, Result};

/// Unbiased three-block MMD estimator
/// `U_XX - 2 (n_1 n_2)^{-1} sum_{i,j} kappa(X_i, Y_j) + U_YY`.
pub fn mmd_u(x: &DataMatrix, y: &DataMatrix, kernel: &KernelSpec) -> Result<f64> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), got: y.d() });
    }
    Ok(pair_u(x, kernel)? - 2.0 * cross_mean(x, y, kernel) + pair_u(y, kernel)?)
}

/// Combined kernel on paired rows `v = (x, y)` for balanced samples of size `n`:
///
/// `k(x1,x2) + k(y1,y2) - (n-1)/n [k(x1,y2) + k(x2,y1)] - 1/n [k(x1,y1) + k(x2,y2)]`.
///
/// The last bracket carries the diagonal `i = j` terms of the cross block; without it
/// the pairing differs from [`mmd_u`] by `2 n^{-2} sum_i k(X_i, Y_i)`.
pub fn paired_kernel(kernel: &KernelSpec, n: usize, v1: (&[f64], &[f64]), v2: (&[f64], &[f64])) -> f64 {
    let (x1, y1) = v1;
    let (x2, y2) = v2;
    let nf = n as f64;
    kernel.eval2(x1, x2) + kernel.eval2(y1, y2)
        - (nf - 1.0) / nf * (kernel.eval2(x1, y2) + kernel.eval2(x2, y1))
        - (kernel.eval2(x1, y1) + kernel.eval2(x2, y2)) / nf
}

/// Degree-two complete U-statistic of the paired rows `V_i = (X_i, Y_i)` under
/// [`paired_kernel`]; equals [`mmd_u`] when `n_1 = n_2`.
pub fn mmd_paired_u(x: &DataMatrix, y: &DataMatrix, kernel: &KernelSpec) -> Result<f64> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), got: y.n() });
    }
    let n = x.n();
    if n < 2 {
        return Err(Error::TooFewRows { required: 2, got: n });
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += paired_kernel(kernel, n, (x.row(i), y.row(i)), (x.row(j), y.row(j)));
            }
        }
    }
    Ok(sum / (n * (n - 1)) as f64)
}
