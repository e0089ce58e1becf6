use nint_core::agreement::AgreementError;
use nint_core::corpus::CorpusError;
use nint_dmg::{EndpointError, PipelineError};
use nint_dmint::ModelError;
use nint_eval::EvalError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Io { .. } => "io_error",
            CliError::Input { .. } => "input_error",
            CliError::Corpus(_) => "corpus_error",
            CliError::Agreement(_) => "agreement_error",
            CliError::Endpoint(_) => "endpoint_error",
            CliError::Pipeline(_) => "pipeline_error",
            CliError::Model(_) => "model_error",
            CliError::Eval(_) => "eval_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Machine-readable failure written to `error.json` and stderr.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub command: String,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn new(command: &str, err: &CliError) -> Self {
        Self {
            command: command.to_string(),
            kind: err.kind().to_string(),
            message: err.to_string(),
            exit_code: err.exit_code(),
        }
    }
}
