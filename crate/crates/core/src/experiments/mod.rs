//! End-to-end studies. Each experiment walks a parameter grid, measures laws by
//! Monte Carlo and emits a [`ResultTable`] with one fixed column layout
//! (see [`ResultRow::HEADER`]).
//!
//! Verdict vocabulary:
//!
//! - `universal`: the measured law matches its Gaussian reference within the DKW radius
//!   (for phase-transition rows: and a single dominant component captures it);
//! - `transition`: the law is Gaussian-universal but no single component captures it;
//! - `failure`: the measured distance exceeds radius plus tolerance;
//! - `consistent` / `inconsistent`: bootstrap median distance below / above the threshold.

mod bootstrap;
mod coverage;
mod lower;
mod phase;

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{CoordinateLaw, SeedStream};
use crate::empirics::DEFAULT_ALPHA;
use crate::error::{Error, Result};

pub use bootstrap::bootstrap_consistency;
pub use coverage::gaussianity_and_coverage;
pub use lower::lower_bound_gap;
pub use phase::phase_transition;

/// Shape of the mean vector in shift-scale grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MuSpec {
    Zero,
    /// `norm * e_1`.
    FirstAxis { norm: f64 },
    /// `norm / sqrt(d) * (1, ..., 1)`.
    Equal { norm: f64 },
    /// Equal entries with `|mu| = scale * tau * sqrt(d / n)`, the boundary between
    /// the two bootstrap regimes.
    Intermediate { scale: f64 },
}

impl MuSpec {
    pub fn vector(&self, d: usize, n: usize, tau: f64) -> Vec<f64> {
        let equal = |norm: f64| vec![norm / (d as f64).sqrt(); d];
        match self {
            MuSpec::Zero => vec![0.0; d],
            MuSpec::FirstAxis { norm } => {
                let mut v = vec![0.0; d];
                v[0] = *norm;
                v
            }
            MuSpec::Equal { norm } => equal(*norm),
            MuSpec::Intermediate { scale } => equal(scale * tau * (d as f64 / n as f64).sqrt()),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match self {
            MuSpec::Zero => 0.0,
            MuSpec::FirstAxis { norm } | MuSpec::Equal { norm } => *norm,
            MuSpec::Intermediate { scale } => *scale,
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(config("mu", format!("{v} must be finite and >= 0")))
        }
    }
}

fn default_tau() -> Vec<f64> {
    vec![1.0]
}

fn default_first_axis() -> Vec<MuSpec> {
    vec![MuSpec::FirstAxis { norm: 1.0 }]
}

fn default_zero_mu() -> Vec<MuSpec> {
    vec![MuSpec::Zero]
}

fn rademacher() -> CoordinateLaw {
    CoordinateLaw::Rademacher
}

/// Simple U-statistic `u_2` under `X_i = mu + tau U_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct U2Grid {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    #[serde(default = "default_first_axis")]
    pub mu: Vec<MuSpec>,
    #[serde(default = "rademacher")]
    pub coordinates: CoordinateLaw,
}

/// Linear-kernel MMD with `P = N(0, blockdiag(S_2))`, `S_2 = [[1,-1],[-1,1]] / sqrt 2`,
/// and `Q = N(d^{-1/2} 1, I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmdGrid {
    pub d: Vec<usize>,
    pub n2: Vec<usize>,
    /// Defaults to `ceil(sqrt(n2 d))` for each `(d, n2)`.
    #[serde(default)]
    pub n1: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PhaseTransitionSpec {
    #[serde(default)]
    pub u2: Option<U2Grid>,
    #[serde(default)]
    pub mmd: Option<MmdGrid>,
}

fn fifty() -> usize {
    50
}

fn point_one() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    pub mu: Vec<MuSpec>,
    #[serde(default)]
    pub coordinates: CoordinateLaw,
    /// Outer data replications; the experiment's `b` counts resamples per data set.
    #[serde(default = "fifty")]
    pub data_replications: usize,
    /// Draws of the unconditional law of `u_2`; defaults to `b`.
    #[serde(default)]
    pub reference_b: Option<usize>,
    #[serde(default = "point_one")]
    pub consistent_threshold: f64,
}

fn three() -> f64 {
    3.0
}

fn one() -> f64 {
    1.0
}

fn two() -> u32 {
    2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSpec {
    pub n: Vec<usize>,
    #[serde(default = "three")]
    pub nu: f64,
    #[serde(default = "one")]
    pub sigma0: f64,
    #[serde(default = "two")]
    pub m: u32,
    /// Also measure the gap with the heavy-tailed coordinate replaced by a Gaussian.
    #[serde(default = "yes")]
    pub control: bool,
}

fn ten() -> usize {
    10
}

/// Excess kurtosis of `n v_2(Z)` for standard Gaussian `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KurtosisStudy {
    #[serde(default = "ten")]
    pub n: usize,
    pub d: Vec<usize>,
    #[serde(default = "point_one")]
    pub threshold: f64,
}

fn point_zero_two() -> f64 {
    0.02
}

fn default_m() -> Vec<u32> {
    vec![2]
}

/// Coverage of `l_m` balls by the scaled average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageStudy {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: Vec<u32>,
    #[serde(default = "fifty")]
    pub radii: usize,
    #[serde(default = "rademacher")]
    pub coordinates: CoordinateLaw,
    #[serde(default = "point_zero_two")]
    pub tolerance: f64,
}

/// Plug-in estimator of `g(x) = x^T x` and its Taylor components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PluginStudy {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    #[serde(default = "default_zero_mu")]
    pub mu: Vec<MuSpec>,
    #[serde(default = "rademacher")]
    pub coordinates: CoordinateLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CoverageSpec {
    #[serde(default)]
    pub kurtosis: Option<KurtosisStudy>,
    #[serde(default)]
    pub coverage: Option<CoverageStudy>,
    #[serde(default)]
    pub plugin: Option<PluginStudy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition(PhaseTransitionSpec),
    BootstrapConsistency(BootstrapSpec),
    LowerBoundGap(LowerBoundSpec),
    GaussianityAndCoverage(CoverageSpec),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition(_) => "phase_transition",
            ExperimentKind::BootstrapConsistency(_) => "bootstrap_consistency",
            ExperimentKind::LowerBoundGap(_) => "lower_bound_gap",
            ExperimentKind::GaussianityAndCoverage(_) => "gaussianity_and_coverage",
        }
    }
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Output stem; defaults to the kind name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: ExperimentKind,
    /// Monte-Carlo draws per law.
    pub b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn nonempty<T>(path: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(config(path, "grid must be nonempty"))
    } else {
        Ok(())
    }
}

fn all_at_least(path: &str, v: &[usize], min: usize) -> Result<()> {
    nonempty(path, v)?;
    match v.iter().find(|x| **x < min) {
        Some(x) => Err(config(path, format!("{x} must be >= {min}"))),
        None => Ok(()),
    }
}

fn positive(path: &str, v: &[f64]) -> Result<()> {
    nonempty(path, v)?;
    match v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        Some(x) => Err(config(path, format!("{x} must be finite and >= 0"))),
        None => Ok(()),
    }
}

fn mus(path: &str, v: &[MuSpec]) -> Result<()> {
    nonempty(path, v)?;
    v.iter().try_for_each(MuSpec::validate).map_err(|e| match e {
        Error::Config { message, .. } => config(path, message),
        e => e,
    })
}

fn within(path: &str, e: Error) -> Error {
    match e {
        Error::Config { path: p, message } => config(format!("{path}.{p}"), message),
        e => e,
    }
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, b: usize, seed: u64) -> Self {
        Self { name: None, kind, b, alpha: DEFAULT_ALPHA, seed: Some(seed) }
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.name())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("spec serializes")))
    }

    /// Checks every grid against its target module's domain. Errors are
    /// [`Error::Config`] with a dotted path relative to the spec.
    pub fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(config("b", format!("{} must be >= 2", self.b)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config("alpha", format!("{} must lie in (0, 1)", self.alpha)));
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                return Err(config("name", format!("{name:?} is not a plain file stem")));
            }
        }
        match &self.kind {
            ExperimentKind::PhaseTransition(p) => {
                if p.u2.is_none() && p.mmd.is_none() {
                    return Err(config("u2", "at least one of u2 / mmd must be given"));
                }
                if let Some(g) = &p.u2 {
                    (|| {
                        all_at_least("n", &g.n, 4)?;
                        all_at_least("d", &g.d, 1)?;
                        positive("tau", &g.tau)?;
                        mus("mu", &g.mu)
                    })()
                    .map_err(|e| within("u2", e))?;
                }
                if let Some(g) = &p.mmd {
                    (|| {
                        all_at_least("d", &g.d, 2)?;
                        if let Some(d) = g.d.iter().find(|d| *d % 2 == 1) {
                            return Err(config("d", format!("{d} must be even (2x2 blocks)")));
                        }
                        all_at_least("n2", &g.n2, 4)?;
                        if let Some(n1) = &g.n1 {
                            all_at_least("n1", n1, 4)?;
                        }
                        Ok(())
                    })()
                    .map_err(|e| within("mmd", e))?;
                }
                Ok(())
            }
            ExperimentKind::BootstrapConsistency(p) => {
                all_at_least("n", &p.n, 4)?;
                all_at_least("d", &p.d, 1)?;
                positive("tau", &p.tau)?;
                mus("mu", &p.mu)?;
                if p.coordinates == CoordinateLaw::SubWeibull {
                    return Err(config("coordinates", "bootstrap study needs sub-Gaussian coordinates"));
                }
                if p.data_replications == 0 {
                    return Err(config("data_replications", "must be >= 1"));
                }
                if matches!(p.reference_b, Some(r) if r < 2) {
                    return Err(config("reference_b", "must be >= 2"));
                }
                if !(p.consistent_threshold > 0.0 && p.consistent_threshold < 1.0) {
                    return Err(config("consistent_threshold", "must lie in (0, 1)"));
                }
                Ok(())
            }
            ExperimentKind::LowerBoundGap(p) => {
                all_at_least("n", &p.n, 1)?;
                if !(p.nu > 2.0 && p.nu <= 3.0) {
                    return Err(config("nu", format!("{} must lie in (2, 3]", p.nu)));
                }
                if !(p.sigma0 > 0.0 && p.sigma0.is_finite()) {
                    return Err(config("sigma0", format!("{} must be positive", p.sigma0)));
                }
                if p.m == 0 || p.m % 2 == 1 {
                    return Err(config("m", format!("{} must be even and >= 2", p.m)));
                }
                Ok(())
            }
            ExperimentKind::GaussianityAndCoverage(p) => {
                if p.kurtosis.is_none() && p.coverage.is_none() && p.plugin.is_none() {
                    return Err(config("kurtosis", "at least one of kurtosis / coverage / plugin must be given"));
                }
                if let Some(k) = &p.kurtosis {
                    (|| {
                        all_at_least("n", &[k.n], 1)?;
                        all_at_least("d", &k.d, 1)
                    })()
                    .map_err(|e| within("kurtosis", e))?;
                }
                if let Some(c) = &p.coverage {
                    (|| {
                        all_at_least("n", &c.n, 1)?;
                        all_at_least("d", &c.d, 1)?;
                        nonempty("m", &c.m)?;
                        if c.m.contains(&0) {
                            return Err(config("m", "must be >= 1"));
                        }
                        if c.radii == 0 {
                            return Err(config("radii", "must be >= 1"));
                        }
                        Ok(())
                    })()
                    .map_err(|e| within("coverage", e))?;
                }
                if let Some(g) = &p.plugin {
                    (|| {
                        all_at_least("n", &g.n, 2)?;
                        all_at_least("d", &g.d, 1)?;
                        positive("tau", &g.tau)?;
                        mus("mu", &g.mu)
                    })()
                    .map_err(|e| within("plugin", e))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Universal,
    Transition,
    Failure,
    Inconsistent,
    Consistent,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Universal => "universal",
            Verdict::Transition => "transition",
            Verdict::Failure => "failure",
            Verdict::Inconsistent => "inconsistent",
            Verdict::Consistent => "consistent",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One grid point. Unused cells stay `None` and are written as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    /// Sub-study or estimator label.
    pub study: String,
    pub n: usize,
    pub d: usize,
    pub m: Option<u32>,
    pub nu: Option<f64>,
    pub tau: Option<f64>,
    pub mu_norm: Option<f64>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub b: usize,
    /// Primary distance and its two-sample DKW radius.
    pub distance: Option<f64>,
    pub radius: Option<f64>,
    /// Secondary distance (dominant-component law, second estimator or control).
    pub distance_alt: Option<f64>,
    pub radius_alt: Option<f64>,
    /// Monte-Carlo variances of the first- and second-order components.
    pub var1: Option<f64>,
    pub var2: Option<f64>,
    /// Closed-form variances of the same components.
    pub closed1: Option<f64>,
    pub closed2: Option<f64>,
    /// Rescaled conditional variances `C(m,j)^2 / C(n,j) sigma_j^2`.
    pub rescaled1: Option<f64>,
    pub rescaled2: Option<f64>,
    pub rho: Option<f64>,
    pub dominant_order: Option<usize>,
    pub kurtosis: Option<f64>,
    pub kurtosis_se: Option<f64>,
    pub kurtosis_target: Option<f64>,
    pub remainder: Option<f64>,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

impl ResultRow {
    /// Fixed CSV column order.
    pub const HEADER: [&'static str; 31] = [
        "experiment",
        "study",
        "n",
        "d",
        "m",
        "nu",
        "tau",
        "mu_norm",
        "n1",
        "n2",
        "b",
        "distance",
        "radius",
        "distance_alt",
        "radius_alt",
        "var1",
        "var2",
        "closed1",
        "closed2",
        "rescaled1",
        "rescaled2",
        "rho",
        "dominant_order",
        "kurtosis",
        "kurtosis_se",
        "kurtosis_target",
        "remainder",
        "bound_lower",
        "bound_upper",
        "slope",
        "verdict",
    ];

    pub(crate) fn new(experiment: &str, study: &str, n: usize, d: usize, b: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            study: study.to_string(),
            n,
            d,
            m: None,
            nu: None,
            tau: None,
            mu_norm: None,
            n1: None,
            n2: None,
            b,
            distance: None,
            radius: None,
            distance_alt: None,
            radius_alt: None,
            var1: None,
            var2: None,
            closed1: None,
            closed2: None,
            rescaled1: None,
            rescaled2: None,
            rho: None,
            dominant_order: None,
            kurtosis: None,
            kurtosis_se: None,
            kurtosis_target: None,
            remainder: None,
            bound_lower: None,
            bound_upper: None,
            slope: None,
            verdict: Verdict::Universal,
        }
    }

    /// Cell text for column `name`; numbers use the shortest round-trip form.
    pub fn field(&self, name: &str) -> Option<String> {
        fn f(v: Option<f64>) -> String {
            v.map(|v| format!("{v}")).unwrap_or_default()
        }
        fn u<T: fmt::Display>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        Some(match name {
            "experiment" => self.experiment.clone(),
            "study" => self.study.clone(),
            "n" => self.n.to_string(),
            "d" => self.d.to_string(),
            "m" => u(self.m),
            "nu" => f(self.nu),
            "tau" => f(self.tau),
            "mu_norm" => f(self.mu_norm),
            "n1" => u(self.n1),
            "n2" => u(self.n2),
            "b" => self.b.to_string(),
            "distance" => f(self.distance),
            "radius" => f(self.radius),
            "distance_alt" => f(self.distance_alt),
            "radius_alt" => f(self.radius_alt),
            "var1" => f(self.var1),
            "var2" => f(self.var2),
            "closed1" => f(self.closed1),
            "closed2" => f(self.closed2),
            "rescaled1" => f(self.rescaled1),
            "rescaled2" => f(self.rescaled2),
            "rho" => f(self.rho),
            "dominant_order" => u(self.dominant_order),
            "kurtosis" => f(self.kurtosis),
            "kurtosis_se" => f(self.kurtosis_se),
            "kurtosis_target" => f(self.kurtosis_target),
            "remainder" => f(self.remainder),
            "bound_lower" => f(self.bound_lower),
            "bound_upper" => f(self.bound_upper),
            "slope" => f(self.slope),
            "verdict" => self.verdict.to_string(),
            _ => return None,
        })
    }

    fn record(&self) -> Vec<String> {
        Self::HEADER.iter().map(|h| self.field(h).expect("header column")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(ResultRow::HEADER)?;
        for r in &self.rows {
            w.write_record(r.record())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.rows.iter().map(|r| r.verdict).collect()
    }

    pub fn rows_for<'a>(&'a self, study: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.study == study)
    }
}

/// Validates `spec` and runs the experiment it names.
pub fn run(spec: &ExperimentSpec) -> Result<ResultTable> {
    match spec.kind {
        ExperimentKind::PhaseTransition(_) => phase_transition(spec),
        ExperimentKind::BootstrapConsistency(_) => bootstrap_consistency(spec),
        ExperimentKind::LowerBoundGap(_) => lower_bound_gap(spec),
        ExperimentKind::GaussianityAndCoverage(_) => gaussianity_and_coverage(spec),
    }
}

fn kind_mismatch(expected: &str, spec: &ExperimentSpec) -> Error {
    Error::domain(format!("expected a {expected} spec, got {}", spec.kind.name()))
}

/// `b` values `f(seed_i)` with `seed_i = stream.derive(i)`, in index order.
pub(crate) fn draws<T: Send>(b: usize, stream: SeedStream, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..b).into_par_iter().map(|i| f(stream.derive(i as u64))).collect()
}

pub(crate) fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub(crate) fn column<const K: usize>(v: &[[f64; K]], j: usize) -> Vec<f64> {
    v.iter().map(|r| r[j]).collect()
}
