//! Gaussian surrogates: `Z_i ~ N(E X_i, Var X_i)`, plain or on augmented vectors
//! `(X_i, X_i^{⊗2}, ..., X_i^{⊗m})`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::matrix::DataMatrix;
use super::model::{sample_iid_matrix, ModelSpec, RowSampler};
use super::seed::{rng_from_seed, SimRng};
use crate::error::{Error, Result};

/// Relative eigenvalue tolerance below which a covariance is rejected as not PSD.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Default cap on the augmented dimension `sum_k d^k`.
pub const DEFAULT_AUGMENT_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Covariance {
    /// Variances of independent coordinates.
    Diagonal(Vec<f64>),
    /// Row-major `d x d` symmetric matrix.
    Dense(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mean: Vec<f64>,
    pub cov: Covariance,
}

impl GaussianMoments {
    pub fn new(mean: Vec<f64>, cov: Covariance) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Empty("mean vector"));
        }
        match &cov {
            Covariance::Diagonal(v) if v.len() != d => {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() })
            }
            Covariance::Dense(c) if c.len() != d * d => {
                return Err(Error::DimensionMismatch { expected: d * d, got: c.len() })
            }
            _ => {}
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov_entry(&self, i: usize, j: usize) -> f64 {
        match &self.cov {
            Covariance::Diagonal(v) => {
                if i == j {
                    v[i]
                } else {
                    0.0
                }
            }
            Covariance::Dense(c) => c[i * self.dim() + j],
        }
    }

    pub fn to_dense_cov(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.cov_entry(i, j);
            }
        }
        out
    }

    /// Plug-in mean and (n-1)-normalized covariance of the rows of `matrix`.
    pub fn empirical(matrix: &DataMatrix) -> Result<Self> {
        let (n, d) = (matrix.n(), matrix.d());
        if n < 2 {
            return Err(Error::TooFewRows { required: 2, got: n });
        }
        let mean = matrix.mean();
        let mut cov = vec![0.0; d * d];
        let mut centered = vec![0.0; d];
        for row in matrix.rows() {
            for (c, (x, m)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
                *c = x - m;
            }
            for i in 0..d {
                let ci = centered[i];
                let out = &mut cov[i * d..(i + 1) * d];
                for j in i..d {
                    out[j] += ci * centered[j];
                }
            }
        }
        let scale = 1.0 / (n as f64 - 1.0);
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] * scale;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        Self::new(mean, Covariance::Dense(cov))
    }
}

/// One connected block of a sparse covariance with its symmetric square root.
#[derive(Debug, Clone)]
struct Block {
    coords: Vec<usize>,
    root: Vec<f64>,
}

/// Sampler for `N(mean, cov)` using a symmetric PSD root of `cov`.
///
/// Dense covariances are split into connected components of their nonzero pattern;
/// each component gets its own eigendecomposition, so block-diagonal designs stay cheap.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    sd: Option<Vec<f64>>,
    blocks: Vec<Block>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn check_eigs(eigs: &[f64], max_eig: f64) -> Result<()> {
    let tol = PSD_TOLERANCE * max_eig.max(0.0);
    for &e in eigs {
        if !e.is_finite() || e < -tol {
            return Err(Error::NotPsd { eigenvalue: e, tolerance: tol });
        }
    }
    Ok(())
}

impl GaussianSampler {
    pub fn new(moments: &GaussianMoments) -> Result<Self> {
        let d = moments.dim();
        let mean = moments.mean.clone();
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("mean has non-finite entries"));
        }
        match &moments.cov {
            Covariance::Diagonal(v) => {
                let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                check_eigs(v, max)?;
                let sd = v.iter().map(|x| x.max(0.0).sqrt()).collect();
                Ok(Self { mean, sd: Some(sd), blocks: Vec::new() })
            }
            Covariance::Dense(c) => {
                for i in 0..d {
                    for j in 0..i {
                        let (a, b) = (c[i * d + j], c[j * d + i]);
                        if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                            return Err(Error::domain(format!(
                                "covariance is not symmetric at ({i}, {j}): {a} vs {b}"
                            )));
                        }
                    }
                }
                let mut parent: Vec<usize> = (0..d).collect();
                for i in 0..d {
                    for j in 0..i {
                        if c[i * d + j] != 0.0 {
                            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                            if a != b {
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
                let mut groups: Vec<Vec<usize>> = Vec::new();
                let mut slot = vec![usize::MAX; d];
                for i in 0..d {
                    let r = find(&mut parent, i);
                    if slot[r] == usize::MAX {
                        slot[r] = groups.len();
                        groups.push(Vec::new());
                    }
                    groups[slot[r]].push(i);
                }
                let mut decomposed = Vec::with_capacity(groups.len());
                let mut max_eig = f64::NEG_INFINITY;
                for coords in groups {
                    let k = coords.len();
                    let sub = DMatrix::from_fn(k, k, |a, b| c[coords[a] * d + coords[b]]);
                    let eig = SymmetricEigen::new(sub);
                    max_eig = eig.eigenvalues.iter().cloned().fold(max_eig, f64::max);
                    decomposed.push((coords, eig));
                }
                let mut blocks = Vec::with_capacity(decomposed.len());
                for (coords, eig) in decomposed {
                    check_eigs(eig.eigenvalues.as_slice(), max_eig)?;
                    let k = coords.len();
                    let v = &eig.eigenvectors;
                    let sqrt_l: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
                    let mut root = vec![0.0; k * k];
                    for a in 0..k {
                        for b in 0..k {
                            root[a * k + b] = (0..k).map(|r| v[(a, r)] * sqrt_l[r] * v[(b, r)]).sum();
                        }
                    }
                    blocks.push(Block { coords, root });
                }
                Ok(Self { mean, sd: None, blocks })
            }
        }
    }
}

impl RowSampler for GaussianSampler {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn fill_row(&self, rng: &mut SimRng, out: &mut [f64]) {
        if let Some(sd) = &self.sd {
            for ((o, m), s) in out.iter_mut().zip(&self.mean).zip(sd) {
                let z: f64 = rng.sample(StandardNormal);
                *o = m + s * z;
            }
            return;
        }
        let mut z = Vec::new();
        for block in &self.blocks {
            let k = block.coords.len();
            z.clear();
            z.extend((0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
            for (a, &c) in block.coords.iter().enumerate() {
                let row = &block.root[a * k..(a + 1) * k];
                out[c] = self.mean[c] + row.iter().zip(&z).map(|(r, z)| r * z).sum::<f64>();
            }
        }
    }
}

/// `n` i.i.d. rows from `N(moments.mean, moments.cov)`.
pub fn gaussian_surrogate(moments: &GaussianMoments, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::TooFewRows { required: 1, got: 0 });
    }
    let sampler = GaussianSampler::new(moments)?;
    Ok(sampler.sample_matrix(n, &mut rng_from_seed(seed)))
}

/// `sum_{k=1..m} d^k`, or `None` on overflow.
pub fn augmented_dim(d: usize, m: u32) -> Option<u128> {
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..m {
        pow = pow.checked_mul(d as u128)?;
        total = total.checked_add(pow)?;
    }
    Some(total)
}

/// Appends the tensor powers `x^{⊗1..m}` of `x` (row-major index order) to `out`.
pub fn augment_row(x: &[f64], m: u32, out: &mut Vec<f64>) {
    let start = out.len();
    out.extend_from_slice(x);
    let mut prev = start;
    let mut prev_len = x.len();
    for _ in 1..m {
        let next = out.len();
        for p in 0..prev_len {
            let a = out[prev + p];
            for &b in x {
                out.push(a * b);
            }
        }
        prev = next;
        prev_len *= x.len();
    }
}

/// Row `i` of the result is `vec(X_i, X_i^{⊗2}, ..., X_i^{⊗m})`.
pub fn augment(matrix: &DataMatrix, m: u32, limit: usize) -> Result<DataMatrix> {
    if m == 0 {
        return Err(Error::domain("augmentation degree must be >= 1"));
    }
    let big = augmented_dim(matrix.d(), m).unwrap_or(u128::MAX);
    if big > limit as u128 {
        return Err(Error::DimensionBudget { dimension: big, limit });
    }
    let dim = big as usize;
    let mut values = Vec::with_capacity(matrix.n() * dim);
    for row in matrix.rows() {
        augment_row(row, m, &mut values);
    }
    Ok(DataMatrix::from_parts(matrix.n(), dim, values))
}

/// Where the first two moments of the augmented vectors come from.
#[derive(Debug, Clone, Copy)]
pub enum MomentSource<'a> {
    /// Plug-in moments of the augmented rows of a given sample.
    Sample(&'a DataMatrix),
    /// Plug-in moments from `sample_size` fresh draws of the model (seeded from the
    /// surrogate seed's sibling stream, never shared with the output draws).
    Model { model: &'a ModelSpec, sample_size: usize },
    /// Moments supplied in closed form, already in augmented coordinates.
    Analytic(&'a GaussianMoments),
}

/// Gaussian rows matching the mean and covariance of the degree-`m` augmented vectors.
pub fn augmented_surrogate(source: MomentSource<'_>, m: u32, n: usize, seed: u64, limit: usize) -> Result<DataMatrix> {
    let moments = match source {
        MomentSource::Sample(x) => GaussianMoments::empirical(&augment(x, m, limit)?)?,
        MomentSource::Model { model, sample_size } => {
            let fresh = sample_iid_matrix(model, sample_size, super::seed::mix64(seed ^ 0xA5A5_A5A5_A5A5_A5A5))?;
            GaussianMoments::empirical(&augment(&fresh, m, limit)?)?
        }
        MomentSource::Analytic(g) => g.clone(),
    };
    gaussian_surrogate(&moments, n, seed)
}

/// `E Y^k` for `Y ~ N(0, 1)`: `(k-1)!!` for even `k`, zero for odd `k`.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|j| j as f64).product()
}

/// Mean and covariance of `(Y, Y^2, ..., Y^m)` for `Y ~ N(0, 1)`.
pub fn gaussian_power_moments(m: u32) -> GaussianMoments {
    let mean: Vec<f64> = (1..=m).map(gaussian_moment).collect();
    let k = m as usize;
    let mut cov = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            cov[a * k + b] = gaussian_moment((a + b + 2) as u32) - mean[a] * mean[b];
        }
    }
    GaussianMoments { mean, cov: Covariance::Dense(cov) }
}
