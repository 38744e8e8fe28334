use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient tensor `S` of a V-statistic `<S, X̄^{⊗m}>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetricTensor {
    /// Row-major values of length `d^order`.
    Dense { order: u32, d: usize, values: Vec<f64> },
    /// `S_{l...l} = weights[l]`, zero off the diagonal.
    Diagonal { order: u32, weights: Vec<f64> },
}

fn permute_index(flat: usize, d: usize, order: usize, perm: &[usize], scratch: &mut Vec<usize>) -> usize {
    scratch.clear();
    let mut rem = flat;
    for _ in 0..order {
        scratch.push(rem % d);
        rem /= d;
    }
    scratch.reverse();
    perm.iter().fold(0, |acc, &p| acc * d + scratch[p])
}

impl SymmetricTensor {
    /// Builds a dense tensor, rejecting values that are not invariant under index permutation.
    pub fn dense(order: u32, d: usize, values: Vec<f64>) -> Result<Self> {
        if order == 0 || d == 0 {
            return Err(Error::domain("tensor order and dimension must be >= 1"));
        }
        let len = d.checked_pow(order).ok_or_else(|| Error::domain("tensor size overflows"))?;
        if values.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: values.len() });
        }
        let t = SymmetricTensor::Dense { order, d, values };
        t.check_symmetric(1e-12)?;
        Ok(t)
    }

    pub fn diagonal(order: u32, weights: Vec<f64>) -> Result<Self> {
        if order == 0 || weights.is_empty() {
            return Err(Error::domain("tensor order and dimension must be >= 1"));
        }
        Ok(SymmetricTensor::Diagonal { order, weights })
    }

    /// Symmetrized tensor `sym(S)` of an arbitrary dense array.
    pub fn symmetrize(order: u32, d: usize, raw: &[f64]) -> Result<Self> {
        let m = order as usize;
        let len = d.pow(order);
        if raw.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: raw.len() });
        }
        let perms = permutations(m);
        let mut scratch = Vec::with_capacity(m);
        let values = (0..len)
            .map(|flat| {
                perms.iter().map(|p| raw[permute_index(flat, d, m, p, &mut scratch)]).sum::<f64>() / perms.len() as f64
            })
            .collect();
        Ok(SymmetricTensor::Dense { order, d, values })
    }

    pub fn order(&self) -> u32 {
        match self {
            SymmetricTensor::Dense { order, .. } | SymmetricTensor::Diagonal { order, .. } => *order,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SymmetricTensor::Dense { d, .. } => *d,
            SymmetricTensor::Diagonal { weights, .. } => weights.len(),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            SymmetricTensor::Dense { values, .. } => values.iter().map(|v| v.abs()).sum(),
            SymmetricTensor::Diagonal { weights, .. } => weights.iter().map(|v| v.abs()).sum(),
        }
    }

    /// Entry at a multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        match self {
            SymmetricTensor::Dense { d, values, .. } => values[idx.iter().fold(0, |acc, &i| acc * d + i)],
            SymmetricTensor::Diagonal { weights, .. } => {
                if idx.iter().all(|&i| i == idx[0]) {
                    weights[idx[0]]
                } else {
                    0.0
                }
            }
        }
    }

    fn check_symmetric(&self, tol: f64) -> Result<()> {
        if let SymmetricTensor::Dense { order, d, values } = self {
            let m = *order as usize;
            let mut scratch = Vec::with_capacity(m);
            let swaps: Vec<Vec<usize>> = (0..m.saturating_sub(1))
                .map(|k| {
                    let mut p: Vec<usize> = (0..m).collect();
                    p.swap(k, k + 1);
                    p
                })
                .collect();
            for flat in 0..values.len() {
                for p in &swaps {
                    let other = values[permute_index(flat, *d, m, p, &mut scratch)];
                    if (values[flat] - other).abs() > tol * values[flat].abs().max(1.0) {
                        return Err(Error::domain(format!("tensor is not symmetric at flat index {flat}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `<S, x^{⊗m}>`.
    pub fn contract(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(match self {
            SymmetricTensor::Diagonal { order, weights } => {
                weights.iter().zip(x).map(|(w, v)| w * v.powi(*order as i32)).sum()
            }
            SymmetricTensor::Dense { order, d, values } => {
                // peel one index at a time: length d^k -> d^{k-1}
                let mut cur = values.clone();
                for _ in 0..*order {
                    cur = cur.chunks_exact(*d).map(|c| c.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
                }
                cur[0]
            }
        })
    }
}

/// All permutations of `0..m` (Heap's algorithm).
pub(crate) fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..m).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}
