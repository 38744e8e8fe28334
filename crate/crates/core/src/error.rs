use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("heavy-tail mass vector invalid: p = {p} gives 1 - 3p = {mass} < 0 (sigma must be <= {sigma_ceiling})")]
    ProbabilityMassInvalid { p: f64, mass: f64, sigma_ceiling: f64 },

    #[error("covariance is not positive semi-definite: eigenvalue {eigenvalue} below tolerance {tolerance}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("augmented dimension {dimension} exceeds budget {limit}")]
    DimensionBudget { dimension: u128, limit: usize },

    #[error("need at least {required} rows, got {got}")]
    TooFewRows { required: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumerating {tuples} ordered tuples exceeds budget {budget}; request the incomplete estimator")]
    EnumerationBudget { tuples: u128, budget: u64 },

    #[error("sample too small: n = {n} < 2m = {}", 2 * .m)]
    SampleTooSmall { n: usize, m: usize },

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("statistic is not multilinear in argument {index}: second difference {second_difference}")]
    NotMultilinear { index: usize, second_difference: f64 },

    #[error("Berry-Esseen ratio {ratio} < 1 violates Lyapunov's inequality")]
    MomentOrderViolated { ratio: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::ParameterDomain(msg.into())
    }
}
