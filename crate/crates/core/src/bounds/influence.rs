use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_nu;
use crate::datagen::{DataMatrix, RowSampler, SeedStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceMoment {
    /// Zero-based observation index.
    pub index: usize,
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub se: f64,
}

/// Monte-Carlo estimate of `M_{nu;i} = |grad_i q(W_i)^T (X_i - E X_i)|_{L_nu}` at the hybrid
/// point `W_i = (X_1, ..., X_{i-1}, 0, Z_{i+1}, ..., Z_n)`.
///
/// The directional derivative comes from the affine identity
/// `grad_i q(W)^T v = q(W with slot i = v) - q(W)`, which needs `q` affine in slot `i`;
/// every replication checks that the second difference in that slot vanishes.
#[allow(clippy::too_many_arguments)]
pub fn influence_moment<F>(
    q: F,
    x_sampler: &dyn RowSampler,
    z_sampler: &dyn RowSampler,
    mean: &[f64],
    n: usize,
    index: usize,
    nu: f64,
    b: usize,
    seed: u64,
) -> Result<InfluenceMoment>
where
    F: Fn(&DataMatrix) -> Result<f64> + Sync,
{
    check_nu(nu)?;
    let d = x_sampler.dim();
    if z_sampler.dim() != d || mean.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: z_sampler.dim().min(mean.len()) });
    }
    if index >= n {
        return Err(Error::domain(format!("index {index} out of range for n = {n}")));
    }
    if b < 2 {
        return Err(Error::domain("need at least 2 replications"));
    }
    let stream = SeedStream::new(seed);
    let draws: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = stream.rng(rep);
            let mut w = vec![0.0; n * d];
            for (i, row) in w.chunks_exact_mut(d).enumerate() {
                match i.cmp(&index) {
                    std::cmp::Ordering::Less => x_sampler.fill_row(&mut rng, row),
                    std::cmp::Ordering::Equal => {}
                    std::cmp::Ordering::Greater => z_sampler.fill_row(&mut rng, row),
                }
            }
            let mut xi = vec![0.0; d];
            x_sampler.fill_row(&mut rng, &mut xi);
            let v: Vec<f64> = xi.iter().zip(mean).map(|(a, m)| a - m).collect();
            let mut eval_at = |scale: f64| -> Result<f64> {
                for (slot, vj) in w[index * d..(index + 1) * d].iter_mut().zip(&v) {
                    *slot = scale * vj;
                }
                q(&DataMatrix::new(n, d, w.clone())?)
            };
            let (f0, f1, f2) = (eval_at(0.0)?, eval_at(1.0)?, eval_at(2.0)?);
            let second = f2 - 2.0 * f1 + f0;
            let scale = f0.abs().max(f1.abs()).max(f2.abs()).max(1.0);
            if second.abs() > 1e-9 * scale {
                return Err(Error::NotMultilinear { index, second_difference: second });
            }
            Ok((f1 - f0).abs().powf(nu))
        })
        .collect::<Result<Vec<f64>>>()?;
    let bf = draws.len() as f64;
    let mom = draws.iter().sum::<f64>() / bf;
    let var = draws.iter().map(|v| (v - mom).powi(2)).sum::<f64>() / (bf - 1.0);
    let value = mom.powf(1.0 / nu);
    let se = if mom > 0.0 { value / (nu * mom) * (var / bf).sqrt() } else { 0.0 };
    Ok(InfluenceMoment { index, value, se })
}
