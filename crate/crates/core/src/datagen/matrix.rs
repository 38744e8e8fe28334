use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which model and derived seed produced a matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_digest: String,
    pub seed: u64,
}

/// An `n x d` row-major array of finite reals, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    provenance: Option<Provenance>,
}

impl DataMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooFewRows { required: 1, got: 0 });
        }
        if d == 0 {
            return Err(Error::domain("dimension d must be >= 1"));
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: values.len() });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at row {}, column {}",
                bad / d,
                bad % d
            )));
        }
        Ok(Self { n, d, values, provenance: None })
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::TooFewRows { required: 1, got: 0 })?;
        let d = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    /// Internal constructor for sampler output, which is finite by construction.
    pub(crate) fn from_parts(n: usize, d: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * d);
        Self { n, d, values, provenance: None }
    }

    pub fn with_provenance(mut self, model_digest: impl Into<String>, seed: u64) -> Self {
        self.provenance = Some(Provenance { model_digest: model_digest.into(), seed });
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    /// `sum_i X_i`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.d];
        for r in self.rows() {
            for (acc, v) in s.iter_mut().zip(r) {
                *acc += v;
            }
        }
        s
    }

    /// `X-bar`.
    pub fn mean(&self) -> Vec<f64> {
        let inv = 1.0 / self.n as f64;
        self.column_sums().into_iter().map(|v| v * inv).collect()
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n {
            return Err(Error::domain(format!("invalid row range {start}..{end} of {}", self.n)));
        }
        Ok(Self::from_parts(end - start, self.d, self.values[start * self.d..end * self.d].to_vec()))
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &DataMatrix) -> Result<Self> {
        if other.d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self::from_parts(self.n + other.n, self.d, values))
    }

    /// Rows reordered by `perm` (`perm[k]` is the source row of output row `k`).
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for &i in perm {
            values.extend_from_slice(self.row(i));
        }
        Self::from_parts(perm.len(), self.d, values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}
