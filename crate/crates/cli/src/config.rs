//! Run configuration: one TOML file, overridden by command-line flags.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! corpus = "data/corpus.jsonl"
//! cache = "cache"
//! output = "runs/latest"
//!
//! [endpoint]
//! base_url = "https://api.example.com/v1"
//! model = "some-chat-model"
//! auth_env = "NINT_API_TOKEN"
//! ```
//!
//! Secrets never live in the file: `auth_env` names the environment
//! variable that holds the bearer token.

use std::path::{Path, PathBuf};

use nint_core::{SplitSpec, Vocabulary};
use nint_dmg::prompt::DEFAULT_TOKEN_BUDGET;
use nint_dmg::{EndpointConfig, Method};
use nint_dmint::{ModelConfig, TrainConfig};
use nint_eval::fusion::FusionSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    /// Response cache directory; `<output>/cache` when unset.
    pub cache: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: None,
            cache: None,
            output: PathBuf::from("nint-out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabOverrides {
    pub frames: Option<Vec<String>>,
    pub emotions: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateSection {
    pub method: Method,
    pub token_budget: usize,
}

impl Default for AnnotateSection {
    fn default() -> Self {
        Self {
            method: Method::Dmg,
            token_budget: DEFAULT_TOKEN_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Read labels from this annotator; the first annotation otherwise.
    pub annotator: Option<String>,
    pub by_topic: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, overrides the model, shuffle, fusion and random-split seeds.
    pub seed: Option<u64>,
    pub paths: Paths,
    pub vocab: VocabOverrides,
    pub endpoint: Option<EndpointConfig>,
    pub annotate: AnnotateSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub fusion: FusionSpec,
    pub analysis: AnalysisSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Pushes the top-level seed into every seeded component.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.model.init_seed = seed;
        self.train.shuffle_seed = seed;
        self.fusion.seed = seed;
        if let nint_core::SplitMode::Random(s) = &mut self.split.mode {
            *s = seed;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.split.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.vocabulary()?;
        if self.train.batch_size == 0 {
            return Err(CliError::Config("train.batch_size must be positive".into()));
        }
        if self.fusion.hidden == 0 || self.fusion.batch_size == 0 {
            return Err(CliError::Config("fusion.hidden and fusion.batch_size must be positive".into()));
        }
        if self.annotate.token_budget == 0 {
            return Err(CliError::Config("annotate.token_budget must be positive".into()));
        }
        if let Some(ep) = &self.endpoint {
            if ep.max_in_flight == 0 {
                return Err(CliError::Config("endpoint.max_in_flight must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Result<Vocabulary, CliError> {
        let base = Vocabulary::default();
        if self.vocab.frames.is_none() && self.vocab.emotions.is_none() {
            return Ok(base);
        }
        Vocabulary::new(
            self.vocab.frames.clone().unwrap_or(base.frame_names),
            self.vocab.emotions.clone().unwrap_or(base.emotion_names),
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn corpus_path(&self) -> Result<&Path, CliError> {
        self.paths
            .corpus
            .as_deref()
            .ok_or_else(|| CliError::Config("no corpus: set paths.corpus or pass --corpus".into()))
    }
}
