//! Configuration-driven entry point behind the `univ` binary.
//!
//! A run reads a JSON [`RunConfig`], runs every experiment in order, writes
//! `<name>.csv` per experiment plus `summary.json` into the output directory and
//! evaluates the configured [`Check`]s.
//!
//! Exit codes: 0 success, 1 runtime failure or failed acceptance check, 2 config error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::datagen::SeedStream;
use crate::empirics::with_threads;
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentSpec, ResultRow, ResultTable};

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn one() -> usize {
    1
}

/// Monte-Carlo size limits enforced before anything runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Largest accepted `b` of any experiment.
    #[serde(default)]
    pub max_b: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

/// Right-hand side of a check: a literal, or another column of the same row
/// as `times * column + plus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operand {
    Number(f64),
    Text(String),
    Column {
        column: String,
        #[serde(default = "unit")]
        times: f64,
        #[serde(default)]
        plus: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// A row-wise assertion on an experiment's table. It passes when at least one row
/// is selected and every selected row satisfies `column op value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    #[serde(default)]
    pub label: Option<String>,
    /// Experiment name (file stem).
    pub experiment: String,
    #[serde(default)]
    pub study: Option<String>,
    /// Restrict to rows whose named columns print exactly as given.
    #[serde(default, rename = "where")]
    pub filter: BTreeMap<String, String>,
    pub column: String,
    pub op: CheckOp,
    pub value: Operand,
    /// Only acceptance checks influence the exit status.
    #[serde(default = "yes")]
    pub acceptance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentSpec>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "one")]
    pub threads: usize,
    /// Master seed; experiments without their own seed use `derive(index)` of it.
    #[serde(default)]
    pub seed: u64,
    /// Overrides every experiment's `alpha` when given.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub checks: Vec<Check>,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn reject_unknown_keys(raw: &Value, known: &Value, path: &str) -> Result<()> {
    if let (Value::Object(r), Value::Object(k)) = (raw, known) {
        for key in r.keys() {
            if !k.contains_key(key) {
                return Err(config_err(format!("{path}.{key}"), "unknown field"));
            }
        }
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates a config document. Every error is [`Error::Config`]
    /// whose path names the offending field (e.g. `experiments[0].nu`).
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text)
            .map_err(|e| config_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(&raw).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })?;
        // experiment fields are flattened, so unknown keys are caught by comparing
        // against the re-serialized spec
        if let Some(list) = raw.get("experiments").and_then(Value::as_array) {
            for (i, (r, spec)) in list.iter().zip(&cfg.experiments).enumerate() {
                reject_unknown_keys(r, &serde_json::to_value(spec)?, &format!("experiments[{i}]"))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(config_err("experiments", "at least one experiment is required"));
        }
        if self.threads == 0 {
            return Err(config_err("threads", "must be >= 1"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(config_err("alpha", format!("{a} must lie in (0, 1)")));
            }
        }
        let mut names = BTreeMap::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let at = |p: String| format!("experiments[{i}].{p}");
            e.validate().map_err(|err| match err {
                Error::Config { path, message } => config_err(at(path), message),
                other => other,
            })?;
            if let Some(max) = self.budgets.max_b {
                if e.b > max {
                    return Err(config_err(at("b".into()), format!("{} exceeds budgets.max_b = {max}", e.b)));
                }
            }
            if let Some(j) = names.insert(e.name().to_string(), i) {
                return Err(config_err(at("name".into()), format!("duplicates the name of experiments[{j}]")));
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            if !names.contains_key(&c.experiment) {
                return Err(config_err(format!("checks[{i}].experiment"), format!("no experiment named {:?}", c.experiment)));
            }
            for col in std::iter::once(&c.column).chain(c.filter.keys()) {
                if !ResultRow::HEADER.contains(&col.as_str()) {
                    return Err(config_err(format!("checks[{i}].column"), format!("unknown column {col:?}")));
                }
            }
            if let Operand::Column { column, .. } = &c.value {
                if !ResultRow::HEADER.contains(&column.as_str()) {
                    return Err(config_err(format!("checks[{i}].value"), format!("unknown column {column:?}")));
                }
            }
        }
        Ok(())
    }

    /// Experiments with `seed` and `alpha` resolved against the run-level settings.
    pub fn resolved_experiments(&self) -> Vec<ExperimentSpec> {
        let master = SeedStream::new(self.seed);
        self.experiments
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut e = e.clone();
                e.seed = Some(e.seed.unwrap_or_else(|| master.derive(i as u64)));
                if let Some(a) = self.alpha {
                    e.alpha = a;
                }
                e
            })
            .collect()
    }

    /// Digest of everything that determines the CSV bytes (threads and output
    /// directory excluded).
    pub fn digest(&self) -> String {
        let canon = serde_json::json!({
            "experiments": self.resolved_experiments(),
            "budgets": self.budgets,
            "checks": self.checks,
        });
        hex::encode(Sha256::digest(serde_json::to_vec(&canon).expect("config serializes")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub label: String,
    pub acceptance: bool,
    pub passed: bool,
    pub rows: usize,
    pub detail: String,
}

fn cmp(op: CheckOp, a: f64, b: f64) -> bool {
    match op {
        CheckOp::Le => a <= b,
        CheckOp::Lt => a < b,
        CheckOp::Ge => a >= b,
        CheckOp::Gt => a > b,
        CheckOp::Eq => a == b,
        CheckOp::Ne => a != b,
    }
}

fn row_passes(c: &Check, r: &ResultRow) -> std::result::Result<(), String> {
    let lhs = r.field(&c.column).unwrap_or_default();
    let fail = |rhs: String| Err(format!("row n={} d={}: {} = {lhs} vs {rhs}", r.n, r.d, c.column));
    match &c.value {
        Operand::Text(t) => {
            let ok = match c.op {
                CheckOp::Eq => lhs == *t,
                CheckOp::Ne => lhs != *t,
                _ => return Err(format!("operator {:?} needs a numeric operand", c.op)),
            };
            if ok {
                Ok(())
            } else {
                fail(t.clone())
            }
        }
        value => {
            let rhs = match value {
                Operand::Number(v) => *v,
                Operand::Column { column, times, plus } => {
                    let s = r.field(column).unwrap_or_default();
                    match s.parse::<f64>() {
                        Ok(v) => times * v + plus,
                        Err(_) => return fail(format!("{column} = {s:?} (not numeric)")),
                    }
                }
                Operand::Text(_) => unreachable!(),
            };
            match lhs.parse::<f64>() {
                Ok(v) if cmp(c.op, v, rhs) => Ok(()),
                _ => fail(format!("{rhs}")),
            }
        }
    }
}

pub fn evaluate_check(c: &Check, table: &ResultTable) -> CheckOutcome {
    let rows: Vec<&ResultRow> = table
        .rows
        .iter()
        .filter(|r| c.study.as_ref().is_none_or(|s| *s == r.study))
        .filter(|r| c.filter.iter().all(|(k, v)| r.field(k).as_deref() == Some(v.as_str())))
        .collect();
    let failures: Vec<String> = rows.iter().filter_map(|r| row_passes(c, r).err()).collect();
    let passed = !rows.is_empty() && failures.is_empty();
    let detail = if rows.is_empty() {
        "no rows selected".to_string()
    } else if failures.is_empty() {
        format!("{} row(s) satisfy {} {:?}", rows.len(), c.column, c.op)
    } else {
        failures.join("; ")
    };
    let label = c.label.clone().unwrap_or_else(|| format!("{}.{} {:?}", c.experiment, c.column, c.op));
    CheckOutcome { label, acceptance: c.acceptance, passed, rows: rows.len(), detail }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub kind: String,
    pub spec_digest: String,
    pub seed: u64,
    pub csv: String,
    pub rows: usize,
    pub wall_time_s: f64,
    pub verdicts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_digest: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub experiments: Vec<ExperimentSummary>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

pub const SUMMARY_FILE: &str = "summary.json";

fn guard_existing(out: &Path, digest: &str, force: bool) -> Result<()> {
    let path = out.join(SUMMARY_FILE);
    if force || !path.exists() {
        return Ok(());
    }
    let old: Value = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    match old.get("config_digest").and_then(Value::as_str) {
        Some(d) if d == digest => Ok(()),
        other => Err(Error::domain(format!(
            "{} holds results of config {} (this config: {digest}); pass --force to overwrite",
            out.display(),
            other.unwrap_or("<unknown>")
        ))),
    }
}

/// Runs every experiment of `cfg`, writes the CSVs and `summary.json`, and returns
/// the summary. Failed checks are reported in the summary, not as errors.
pub fn execute(cfg: &RunConfig, force: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let digest = cfg.digest();
    guard_existing(&cfg.out, &digest, force)?;
    std::fs::create_dir_all(&cfg.out)?;
    let start = Instant::now();
    let mut tables = BTreeMap::new();
    let mut summaries = Vec::new();
    for spec in cfg.resolved_experiments() {
        let t0 = Instant::now();
        let table = with_threads(cfg.threads, || experiments::run(&spec))??;
        let csv = format!("{}.csv", spec.name());
        table.save_csv(&cfg.out.join(&csv))?;
        summaries.push(ExperimentSummary {
            name: spec.name().to_string(),
            kind: spec.kind.name().to_string(),
            spec_digest: spec.digest(),
            seed: spec.seed(),
            csv,
            rows: table.rows.len(),
            wall_time_s: t0.elapsed().as_secs_f64(),
            verdicts: table.verdicts().iter().map(|v| v.to_string()).collect(),
        });
        tables.insert(spec.name().to_string(), table);
    }
    let checks: Vec<CheckOutcome> = cfg.checks.iter().map(|c| evaluate_check(c, &tables[&c.experiment])).collect();
    let summary = RunSummary {
        config_digest: digest,
        seed: cfg.seed,
        threads: cfg.threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        passed: checks.iter().all(|c| c.passed || !c.acceptance),
        experiments: summaries,
        checks,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    std::fs::write(cfg.out.join(SUMMARY_FILE), json)?;
    Ok(summary)
}

struct KindInfo {
    kind: &'static str,
    parameters: &'static str,
    claim: &'static str,
}

const KINDS: [KindInfo; 4] = [
    KindInfo {
        kind: "phase_transition",
        parameters: "u2 {n, d, tau, mu, coordinates}; mmd {d, n2, n1}",
        claim: "the limiting law of a U-statistic follows its dominant Hoeffding component; \
                u_2 switches from Gaussian to degenerate as d grows past n^2 |mu|^2 / tau^2, and \
                imbalanced MMD mixes both components when n1 ~ sqrt(n2 d)",
    },
    KindInfo {
        kind: "bootstrap_consistency",
        parameters: "n, d, tau, mu, coordinates, data_replications, reference_b, consistent_threshold",
        claim: "plain resampling is consistent for u_2 when tau sqrt(d) = o(sqrt(n) |mu|), \
                resampling centred data when |mu| = o(1) and tau sqrt(d) = omega(sqrt(n) |mu|), \
                and both fail when |mu| / tau ~ sqrt(d / n)",
    },
    KindInfo {
        kind: "lower_bound_gap",
        parameters: "n, nu, sigma0, m, control",
        claim: "for nu-th moment data the universality error of a degree-m polynomial cannot \
                decay faster than n^{-(nu-2)/(2 nu m)}; the gap is localized at t = -2 sigma_n",
    },
    KindInfo {
        kind: "gaussianity_and_coverage",
        parameters: "kurtosis {n, d, threshold}; coverage {n, d, m, radii, coordinates, tolerance}; \
                     plugin {n, d, tau, mu, coordinates}",
        claim: "degenerate V-statistics are asymptotically normal exactly when their excess kurtosis \
                vanishes (12/d for n v_2); l_m-ball probabilities of averages are universal when \
                d = o(n); plug-in estimators follow their dominant Taylor component",
    },
];

/// Text listing of the experiment kinds in a fixed order.
pub fn list_experiments() -> String {
    let mut s = String::new();
    for k in &KINDS {
        s.push_str(&format!("{}\n  parameters: {}\n  claim: {}\n", k.kind, k.parameters, k.claim));
    }
    s
}

#[derive(Debug, Parser)]
#[command(name = "univ", version, about = "Monte-Carlo laboratory for Gaussian universality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiments of a config file.
    Run {
        #[arg(long, env = "UNIV_CONFIG")]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long, env = "UNIV_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "UNIV_THREADS")]
        threads: Option<usize>,
        /// Master seed (overrides the config).
        #[arg(long, env = "UNIV_SEED")]
        seed: Option<u64>,
        /// Overwrite outputs of a different config.
        #[arg(long, env = "UNIV_FORCE")]
        force: bool,
    },
    /// List experiment kinds, their parameters and the claim each reproduces.
    List,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

fn run_command(config: &Path, out: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>, force: bool) -> Result<RunSummary> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| config_err(config.display().to_string(), format!("cannot read config: {e}")))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(o) = out {
        cfg.out = o;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    execute(&cfg, force)
}

/// Entry point shared by the binary and the tests; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            0
        }
        Command::Run { config, out, threads, seed, force } => match run_command(&config, out, threads, seed, force) {
            Ok(summary) => {
                for c in &summary.checks {
                    let tag = if c.passed { "PASS" } else { "FAIL" };
                    println!("{tag} {} ({})", c.label, c.detail);
                }
                for e in &summary.experiments {
                    println!("wrote {} ({} rows)", e.csv, e.rows);
                }
                if summary.passed {
                    0
                } else {
                    eprintln!("univ: acceptance check failed");
                    1
                }
            }
            Err(e) => {
                eprintln!("univ: {e}");
                exit_code(&e)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiments": [{"kind": "phase_transition", "b": 100, "u2": {"n": [20], "d": [3]}}],
        "checks": [{"experiment": "phase_transition", "column": "distance", "op": "le", "value": 1}]
    }"#;

    #[test]
    fn parse_minimal() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.threads, 1);
        assert_eq!(c.out, PathBuf::from("results"));
        assert_eq!(c.digest(), RunConfig::parse(MINIMAL).unwrap().digest());
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = r#"{"experiments": [{"kind": "lower_bound_gap", "b": 100, "n": [16], "nu": 4}]}"#;
        match RunConfig::parse(bad) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "experiments[0].nu");
                assert!(message.contains("(2, 3]"));
            }
            other => panic!("{other:?}"),
        }
        let typo = r#"{"experiments": [{"kind": "lower_bound_gap", "b": 100, "n": [16], "sigma_0": 1}]}"#;
        assert!(matches!(RunConfig::parse(typo), Err(Error::Config { path, .. }) if path == "experiments[0].sigma_0"));
        let wrong_type = r#"{"experiments": [], "threads": "four"}"#;
        assert!(matches!(RunConfig::parse(wrong_type), Err(Error::Config { path, .. }) if path == "threads"));
        let check = r#"{"experiments": [{"kind": "lower_bound_gap", "b": 100, "n": [16]}],
            "checks": [{"experiment": "nope", "column": "distance", "op": "le", "value": 1}]}"#;
        assert!(matches!(RunConfig::parse(check), Err(Error::Config { path, .. }) if path == "checks[0].experiment"));
    }

    #[test]
    fn checks_against_columns() {
        let mut r = ResultRow::new("e", "s", 10, 2, 100);
        r.distance = Some(0.05);
        r.radius = Some(0.04);
        let t = ResultTable { experiment: "e".into(), rows: vec![r] };
        let mk = |op, value| Check {
            label: None,
            experiment: "e".into(),
            study: None,
            filter: BTreeMap::new(),
            column: "distance".into(),
            op,
            value,
            acceptance: true,
        };
        assert!(!evaluate_check(&mk(CheckOp::Le, Operand::Column { column: "radius".into(), times: 1.0, plus: 0.0 }), &t).passed);
        assert!(evaluate_check(&mk(CheckOp::Le, Operand::Column { column: "radius".into(), times: 1.0, plus: 0.02 }), &t).passed);
        assert!(evaluate_check(&mk(CheckOp::Gt, Operand::Number(0.01)), &t).passed);
        let mut v = mk(CheckOp::Eq, Operand::Text("universal".into()));
        v.column = "verdict".into();
        assert!(evaluate_check(&v, &t).passed);
        v.study = Some("other".into());
        assert!(!evaluate_check(&v, &t).passed);
    }

    #[test]
    fn listing_is_stable() {
        let a = list_experiments();
        assert_eq!(a, list_experiments());
        for k in ["phase_transition", "bootstrap_consistency", "lower_bound_gap", "gaussianity_and_coverage"] {
            assert!(a.contains(k));
        }
        assert_eq!(a.matches("claim:").count(), 4);
    }

    #[test]
    fn refuses_foreign_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.out = dir.path().to_path_buf();
        let s = execute(&cfg, false).unwrap();
        assert!(s.passed);
        let csv = std::fs::read_to_string(dir.path().join("phase_transition.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        // same config: allowed
        execute(&cfg, false).unwrap();
        cfg.seed = 99;
        assert!(execute(&cfg, false).is_err());
        execute(&cfg, true).unwrap();
    }
}
