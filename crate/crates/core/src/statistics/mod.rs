//! Evaluators for the polynomial statistics: U-, V- and tensor statistics, `p*_m`,
//! the MMD estimator and Taylor plug-in components.

mod kernel;
mod mmd;
mod plugin;
mod tensor;
mod ustat;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use kernel::{KernelFn, KernelSpec};
pub use mmd::{mmd_paired_u, mmd_u, paired_kernel};
pub use plugin::{plugin_components, DerivativeTensors, PluginComponents, PluginForm};
pub use tensor::SymmetricTensor;
pub use ustat::{
    complete_u, falling_factorial, incomplete_u, lm_norm_power, pstar, scaled_average, simple_u2, simple_v2,
    tensor_v, IncompleteU, DEFAULT_ENUMERATION_BUDGET,
};

use crate::datagen::DataMatrix;
use crate::error::{Error, Result};

fn default_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}

/// A scalar statistic of a data matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatisticSpec {
    /// `n^{-1/2} sum_i X_{i,coordinate}`.
    Average {
        #[serde(default)]
        coordinate: usize,
    },
    /// `|sqrt(n) X̄|_{l_m}^m`.
    LmNormPower { m: u32 },
    SimpleU2,
    SimpleV2,
    CompleteU {
        kernel: KernelSpec,
        m: usize,
        #[serde(default = "default_budget")]
        budget: u64,
    },
    TensorV { s: SymmetricTensor },
    PStar { m: u32 },
    /// Rows `0..n1` form the first sample, the rest the second.
    Mmd { kernel: KernelSpec, n1: usize },
    /// Taylor plug-in estimate `g(X̄)` assembled from components around `center = E X_1`.
    Plugin { form: PluginForm, center: Vec<f64> },
}

impl StatisticSpec {
    pub fn evaluate(&self, x: &DataMatrix) -> Result<f64> {
        match self {
            StatisticSpec::Average { coordinate } => scaled_average(x, *coordinate),
            StatisticSpec::LmNormPower { m } => lm_norm_power(x, *m),
            StatisticSpec::SimpleU2 => simple_u2(x),
            StatisticSpec::SimpleV2 => Ok(simple_v2(x)),
            StatisticSpec::CompleteU { kernel, m, budget } => complete_u(x, kernel, *m, *budget),
            StatisticSpec::TensorV { s } => tensor_v(x, s),
            StatisticSpec::PStar { m } => pstar(x, *m),
            StatisticSpec::Mmd { kernel, n1 } => {
                if *n1 >= x.n() {
                    return Err(Error::TooFewRows { required: n1 + 2, got: x.n() });
                }
                mmd_u(&x.slice_rows(0, *n1)?, &x.slice_rows(*n1, x.n())?, kernel)
            }
            StatisticSpec::Plugin { form, center } => Ok(plugin_components(x, form, center)?.total),
        }
    }

    /// Hex SHA-256 of the JSON form; callback kernels fall back to their debug form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).unwrap_or_else(|_| format!("{self:?}").into_bytes());
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispatch_matches_direct_calls() {
        let x = DataMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0], [2.0, 0.0], [0.0, 3.0]]).unwrap();
        assert_eq!(StatisticSpec::SimpleU2.evaluate(&x).unwrap(), simple_u2(&x).unwrap());
        assert_eq!(StatisticSpec::PStar { m: 2 }.evaluate(&x).unwrap(), pstar(&x, 2).unwrap());
        assert_eq!(StatisticSpec::Average { coordinate: 0 }.evaluate(&x).unwrap(), 2.0);
        assert_eq!(StatisticSpec::LmNormPower { m: 2 }.evaluate(&x).unwrap(), 4.0 * simple_v2(&x));
        let mmd = StatisticSpec::Mmd { kernel: KernelSpec::LinearInner, n1: 2 };
        let direct = mmd_u(&x.slice_rows(0, 2).unwrap(), &x.slice_rows(2, 4).unwrap(), &KernelSpec::LinearInner);
        assert_eq!(mmd.evaluate(&x).unwrap(), direct.unwrap());
    }

    #[test]
    fn json_round_trip_and_digest() {
        let s: StatisticSpec =
            serde_json::from_str(r#"{"kind":"complete_u","kernel":{"kind":"linear_inner"},"m":3}"#).unwrap();
        assert!(matches!(s, StatisticSpec::CompleteU { budget: DEFAULT_ENUMERATION_BUDGET, .. }));
        assert_eq!(s.digest(), s.clone().digest());
        assert_ne!(s.digest(), StatisticSpec::SimpleU2.digest());
    }
}
