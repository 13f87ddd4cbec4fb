use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate index label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown index label `{0}`")]
    UnknownLabel(String),

    #[error("lattice point {point:?} for label `{label}` exceeds the l1 truncation {truncation}")]
    SupportBound {
        label: String,
        point: Vec<i32>,
        truncation: u32,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("partition does not split the label set: {0}")]
    BadPartition(String),

    #[error("{count} labels exceed the partition cap of {cap}")]
    PartitionCap { count: usize, cap: usize },

    #[error("matricization side of {size} exceeds the dense cap of {cap}")]
    DenseCap { size: usize, cap: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid site profile sigma={sigma}, mu={mu}")]
    SiteProfile { sigma: u32, mu: i32 },

    #[error("coefficient overflow while building a renormalization polynomial")]
    CoefficientOverflow,

    #[error("invalid chaos spec: {0}")]
    ChaosSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown tensor family `{0}`")]
    UnknownFamily(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
