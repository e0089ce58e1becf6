use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("vector table line {line}: {reason}")]
    TableLoad { line: usize, reason: String },
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("article {0} has no intent labels")]
    MissingLabels(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
