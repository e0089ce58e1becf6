//! Structured prompting for news intent annotation.
//!
//! [`prompt`] builds the prompts for each method, [`endpoint`] talks to a
//! chat-completions service (or a file-backed mock), [`pipeline`] runs a
//! method over a corpus with caching, [`parse`] maps replies onto intent
//! labels, and [`cost`] summarises queries and tokens per method.

pub mod cache;
pub mod cost;
pub mod endpoint;
pub mod parse;
pub mod pipeline;
pub mod prompt;
pub mod tokens;

pub use cache::ResponseCache;
pub use cost::{cost_report, CostRecord, CostReport};
pub use endpoint::{connect, EndpointConfig, EndpointError, LlmClient, MockClient};
pub use parse::{parse_response, render_answers, ParseFailure, ParsedResponse, SlotStatus};
pub use pipeline::{annotated_corpus, run_pipeline, PipelineError, PipelineOptions, PipelineRun};
pub use prompt::{build_prompt, Method, PromptBundle};
pub use tokens::{TokenCounter, WhitespaceTokens};
