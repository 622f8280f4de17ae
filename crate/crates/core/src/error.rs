use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("site index {index} out of range for {n_sites} sites")]
    IndexOutOfRange { index: usize, n_sites: usize },

    #[error("no samples accumulated")]
    NoSamples,

    #[error("degenerate metric at t = {t}: {reason}")]
    DegenerateMetric { t: f64, reason: String },

    #[error("non-finite parameters at t = {t} (step {step})")]
    NonFinite { t: f64, step: usize, last_params: String },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("ground-state oracle missing or empty")]
    OracleMissing,

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("run {realization} (instance seed {instance_seed}, T = {total_time}): {source}")]
    Run { realization: usize, instance_seed: u64, total_time: f64, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
