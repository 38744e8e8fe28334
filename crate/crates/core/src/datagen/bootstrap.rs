use rand::Rng;

use super::matrix::DataMatrix;
use super::seed::{rng_from_seed, SimRng};

/// Draws `n` rows uniformly with replacement; with `centered`, `X̄` is subtracted
/// from every drawn row so that the conditional mean of a row is exactly zero.
pub fn bootstrap_resample(matrix: &DataMatrix, centered: bool, seed: u64) -> DataMatrix {
    resample_with(matrix, centered, &mut rng_from_seed(seed))
}

pub fn resample_with(matrix: &DataMatrix, centered: bool, rng: &mut SimRng) -> DataMatrix {
    let (n, d) = (matrix.n(), matrix.d());
    let shift = if centered { matrix.mean() } else { vec![0.0; d] };
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        let row = matrix.row(rng.random_range(0..n));
        values.extend(row.iter().zip(&shift).map(|(x, s)| x - s));
    }
    DataMatrix::from_parts(n, d, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> DataMatrix {
        DataMatrix::from_rows(&[[1.0, 4.0], [2.0, -1.0], [6.0, 0.0]]).unwrap()
    }

    #[test]
    fn single_row() {
        let x = DataMatrix::from_rows(&[[3.0, -2.0]]).unwrap();
        assert_eq!(bootstrap_resample(&x, false, 1).values(), &[3.0, -2.0]);
        assert_eq!(bootstrap_resample(&x, true, 1).values(), &[0.0, 0.0]);
    }

    fn resampled_row_mean(centered: bool) -> (Vec<f64>, Vec<f64>) {
        let x = data();
        let reps = 100_000;
        let mut rng = rng_from_seed(21);
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for _ in 0..reps {
            let r = resample_with(&x, centered, &mut rng);
            for j in 0..2 {
                let v = r.get(0, j);
                sum[j] += v;
                sq[j] += v * v;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / reps as f64).collect();
        let se = (0..2).map(|j| ((sq[j] / reps as f64 - mean[j] * mean[j]) / reps as f64).sqrt()).collect();
        (mean, se)
    }

    #[test]
    fn centered_rows_have_zero_conditional_mean() {
        let (mean, se) = resampled_row_mean(true);
        for j in 0..2 {
            assert!(mean[j].abs() < 4.0 * se[j]);
        }
    }

    #[test]
    fn uncentered_rows_have_sample_mean() {
        let (mean, se) = resampled_row_mean(false);
        let xbar = data().mean();
        for j in 0..2 {
            assert!((mean[j] - xbar[j]).abs() < 4.0 * se[j]);
        }
    }
}
