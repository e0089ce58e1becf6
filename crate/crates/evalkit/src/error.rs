use nint_core::metrics::MetricError;
use nint_dmint::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series of length {0} is too short")]
    TooShort(usize),
    #[error("article {0:?} is missing from one of the feature sources")]
    Alignment(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("heatmap does not match its schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
