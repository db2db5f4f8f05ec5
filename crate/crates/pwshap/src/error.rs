use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node name: {0}")]
    UnknownNode(String),

    #[error("invalid DAG: {0}")]
    InvalidDag(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("treatment column {column} contains non-binary value {value}")]
    NonBinaryTreatment { column: String, value: f64 },

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("logistic regression failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("sampler does not support do-interventions")]
    DoUnsupported,

    #[error("conditioning event has (near-)zero probability: {0}")]
    ZeroProbabilityEvent(String),

    #[error("propensity weight for coalition {coalition} is {weight:.6}, below the {clip_epsilon} overlap floor")]
    NearZeroWeight {
        coalition: String,
        weight: f64,
        clip_epsilon: f64,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("too many features for exact enumeration: {n} > 20; subset the features first")]
    TooManyFeatures { n: usize },

    #[error("unknown oracle quantity {quantity:?} for scenario {scenario:?}; available: {available:?}")]
    UnknownQuantity {
        scenario: String,
        quantity: String,
        available: Vec<String>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
