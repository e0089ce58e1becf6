//! `nint`: batch commands over the corpus, annotation, model and
//! evaluation crates. Every command writes its artifacts and a
//! `manifest.json` under the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nint_dmg::Method;
use nint_dmint::Variant;

pub use config::RunConfig;
pub use error::{CliError, ErrorReport};
pub use manifest::{Manifest, RunContext};

#[derive(Debug, Parser)]
#[command(name = "nint", version, about = "News intent annotation, modelling and evaluation")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for model init, shuffling, fusion and random splits.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Corpus file (line-delimited records).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupByArg {
    Subreddit,
    Domain,
    Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Part {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and check a corpus file.
    Validate,
    /// Write train/val/test corpora according to the split spec.
    Split,
    /// Per-group article counts, average length and average posts.
    Stats {
        #[arg(long = "group-by", value_enum)]
        group_by: Vec<GroupByArg>,
    },
    /// Label the corpus with an LLM endpoint.
    Annotate {
        #[arg(long)]
        method: Option<Method>,
        /// `mock:<dir>` or a chat-completions base URL.
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Agreement statistics for a rating table or a multi-annotator corpus.
    Agree {
        /// Rating table: CSV rows of per-category counts, or JSON `{"counts": [[..]]}`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Credibility verification report from per-item votes.
    Verify {
        #[arg(long)]
        votes: PathBuf,
    },
    /// Train the intent model and save a checkpoint.
    Train {
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Evaluate a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        part: Part,
    },
    /// Train and evaluate ablated variants.
    Ablate {
        /// Repeatable; defaults to the full model and all five ablations.
        #[arg(long)]
        variant: Vec<Variant>,
    },
    /// Late fusion of intent features with downstream task features.
    Fuse {
        #[arg(long = "task-features")]
        task_features: PathBuf,
        /// JSONL records `{"id", "label"}` or `{"id", "value"}`, optional `"split"`.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long = "intent-features", conflicts_with = "checkpoint")]
        intent_features: Option<PathBuf>,
        /// Compute intent features from this checkpoint over the corpus.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Token attribution heatmaps.
    Attribute {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Only the first N articles.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Consistency tables between intent components and engagement.
    Analyze {
        #[arg(long = "by-topic")]
        by_topic: bool,
        #[arg(long)]
        annotator: Option<String>,
    },
    /// Query and token cost per prompting method.
    CostReport {
        /// Output directories of `annotate` runs (repeatable).
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        /// Gold corpus for scoring polarity predictions.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// JSON map from method to macro-F1; overrides scores from `--gold`.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Split => "split",
            Command::Stats { .. } => "stats",
            Command::Annotate { .. } => "annotate",
            Command::Agree { .. } => "agree",
            Command::Verify { .. } => "verify",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Ablate { .. } => "ablate",
            Command::Fuse { .. } => "fuse",
            Command::Attribute { .. } => "attribute",
            Command::Analyze { .. } => "analyze",
            Command::CostReport { .. } => "cost-report",
        }
    }
}

/// Config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.output {
        config.paths.output = out.clone();
    }
    if let Some(c) = &cli.corpus {
        config.paths.corpus = Some(c.clone());
    }
    if let Some(seed) = cli.seed.or(config.seed) {
        config.apply_seed(seed);
    }
    match &cli.command {
        Command::Annotate { method, endpoint } => {
            if let Some(m) = method {
                config.annotate.method = *m;
            }
            if let Some(url) = endpoint {
                let mut ep = config.endpoint.take().unwrap_or_else(|| nint_dmg::EndpointConfig::new(url.clone()));
                ep.base_url = url.clone();
                config.endpoint = Some(ep);
            }
        }
        Command::Train { variant: Some(v) } => config.model.variant = *v,
        Command::Analyze { by_topic, annotator } => {
            config.analysis.by_topic |= *by_topic;
            if annotator.is_some() {
                config.analysis.annotator = annotator.clone();
            }
        }
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

/// Runs one command and writes its manifest.
pub fn run(cli: &Cli, args: Vec<String>) -> Result<Manifest, CliError> {
    let config = resolve_config(cli)?;
    let mut ctx = RunContext::new(cli.command.name(), args, config)?;
    if let Some(path) = &cli.config {
        ctx.input(path)?;
    }
    commands::dispatch(&cli.command, &mut ctx)?;
    ctx.finish()
}
