use serde::{Deserialize, Serialize};

use super::tensor::SymmetricTensor;
use crate::datagen::{dot, norm_sq, DataMatrix};
use crate::error::{Error, Result};

/// `g(E X_1)` and the derivative tensors `d^j g(E X_1)` for `j = 1..=m+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTensors {
    pub value: f64,
    pub tensors: Vec<SymmetricTensor>,
}

impl DerivativeTensors {
    pub fn new(value: f64, tensors: Vec<SymmetricTensor>) -> Result<Self> {
        if tensors.len() < 2 {
            return Err(Error::domain("need derivative tensors of orders 1..=m+1 with m >= 1"));
        }
        let d = tensors[0].dim();
        for (k, t) in tensors.iter().enumerate() {
            if t.order() as usize != k + 1 {
                return Err(Error::domain(format!("derivative {} has order {}", k + 1, t.order())));
            }
            if t.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: t.dim() });
            }
        }
        Ok(Self { value, tensors })
    }

    /// Taylor order `m` (the last tensor has order `m + 1`).
    pub fn order(&self) -> usize {
        self.tensors.len() - 1
    }
}

/// The smooth function whose plug-in estimator `g(X̄)` is decomposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PluginForm {
    /// `g(x) = x^T x`; its second-order expansion is exact.
    GToy,
    Taylor(DerivativeTensors),
}

/// `components[j] = (1/j!) <d^j g(E X_1), S_n^{⊗j}>` for `j = 0..=m`, with `S_n = X̄ - E X_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginComponents {
    pub components: Vec<f64>,
    /// Order-`(m+1)` term with the top derivative frozen at `E X_1`; exact when
    /// `g` is a polynomial of degree at most `m + 1`, and zero for `GToy`.
    pub remainder: f64,
    pub total: f64,
}

pub fn plugin_components(x: &DataMatrix, form: &PluginForm, center: &[f64]) -> Result<PluginComponents> {
    if center.len() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), got: center.len() });
    }
    let s: Vec<f64> = x.mean().iter().zip(center).map(|(a, b)| a - b).collect();
    let (components, remainder) = match form {
        PluginForm::GToy => (vec![norm_sq(center), 2.0 * dot(&s, center), norm_sq(&s)], 0.0),
        PluginForm::Taylor(dt) => {
            if dt.tensors[0].dim() != x.d() {
                return Err(Error::DimensionMismatch { expected: x.d(), got: dt.tensors[0].dim() });
            }
            let mut out = vec![dt.value];
            let mut factorial = 1.0;
            for (k, t) in dt.tensors.iter().enumerate() {
                factorial *= (k + 1) as f64;
                out.push(t.contract(&s)? / factorial);
            }
            let rem = out.pop().unwrap_or(0.0);
            (out, rem)
        }
    };
    let total = components.iter().sum::<f64>() + remainder;
    Ok(PluginComponents { components, remainder, total })
}
