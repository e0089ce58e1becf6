//! Runs a prompting method over a corpus with bounded parallelism and a
//! response cache.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nint_core::{Corpus, IntentAnnotation, NewsArticle};
use serde::Serialize;
use thiserror::Error;

use crate::cache::{cache_key, ResponseCache};
use crate::cost::CostRecord;
use crate::endpoint::{ChatMessage, EndpointError, LlmClient, LlmResponse, RequestContext};
use crate::parse::{parse_response, ParseFailure, ParsedResponse};
use crate::prompt::{build_prompt, Method, DEFAULT_TOKEN_BUDGET};
use crate::tokens::{TokenCounter, WhitespaceTokens};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("article {article_id}: {source}")]
    Endpoint {
        article_id: String,
        #[source]
        source: EndpointError,
    },
    #[error("cache write failed: {0}")]
    Cache(#[from] std::io::Error),
    #[error("max_in_flight must be positive")]
    NoWorkers,
}

pub struct PipelineOptions<'a> {
    pub method: Method,
    pub token_budget: usize,
    pub max_in_flight: usize,
    pub tokens: &'a dyn TokenCounter,
    pub cache: Option<&'a ResponseCache>,
}

impl Default for PipelineOptions<'_> {
    fn default() -> Self {
        Self {
            method: Method::Dmg,
            token_budget: DEFAULT_TOKEN_BUDGET,
            max_in_flight: 4,
            tokens: &WhitespaceTokens,
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArticleOutcome {
    pub article_id: String,
    pub method: Method,
    pub parsed: ParsedResponse,
    /// Set when every slot parsed and the method asks all ten slots.
    pub annotation: Option<IntentAnnotation>,
    /// Final reply text.
    pub response: String,
}

impl ArticleOutcome {
    pub fn failures(&self) -> Vec<ParseFailure> {
        self.parsed.failures(&self.article_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineRun {
    pub outcomes: Vec<ArticleOutcome>,
    pub costs: Vec<CostRecord>,
    pub cache_hits: usize,
    pub requests: usize,
}

impl PipelineRun {
    pub fn failures(&self) -> Vec<ParseFailure> {
        self.outcomes.iter().flat_map(ArticleOutcome::failures).collect()
    }
}

/// Annotator id written into produced annotations.
pub fn annotator_id(model: &str, method: Method) -> String {
    format!("{model}/{}", method.key())
}

struct Counters {
    hits: AtomicUsize,
    requests: AtomicUsize,
}

fn ask(
    client: &dyn LlmClient,
    cache: Option<&ResponseCache>,
    messages: &[ChatMessage],
    ctx: &RequestContext,
    counters: &Counters,
) -> Result<LlmResponse, PipelineError> {
    let key = cache_key(client.model_name(), messages);
    if let Some(hit) = cache.and_then(|c| c.get(&key)) {
        counters.hits.fetch_add(1, Ordering::SeqCst);
        return Ok(hit);
    }
    counters.requests.fetch_add(1, Ordering::SeqCst);
    let resp = client.complete(messages, ctx).map_err(|source| PipelineError::Endpoint {
        article_id: ctx.article_id.clone(),
        source,
    })?;
    if let Some(c) = cache {
        c.put(&key, &resp)?;
    }
    Ok(resp)
}

fn annotate_one(
    article: &NewsArticle,
    corpus: &Corpus,
    client: &dyn LlmClient,
    opts: &PipelineOptions<'_>,
    counters: &Counters,
) -> Result<(ArticleOutcome, CostRecord), PipelineError> {
    let bundle = build_prompt(article, opts.method, &corpus.vocab, opts.token_budget, opts.tokens);
    let mut messages = Vec::new();
    let mut prompt_tokens = 0;
    let mut completion_tokens = 0;
    let mut last = String::new();
    for (i, block) in bundle.text_blocks.iter().enumerate() {
        messages.push(ChatMessage::user(block.clone()));
        prompt_tokens += messages.iter().map(|m| opts.tokens.count(&m.content)).sum::<usize>();
        let ctx = RequestContext {
            article_id: article.id.clone(),
            method: opts.method,
            query: i + 1,
        };
        let resp = ask(client, opts.cache, &messages, &ctx, counters)?;
        completion_tokens += opts.tokens.count(&resp.text);
        messages.push(ChatMessage::assistant(resp.text.clone()));
        last = resp.text;
    }
    let parsed = parse_response(&last, &bundle.slots, &corpus.vocab);
    let annotation = if bundle.slots.len() == nint_core::LabelSlot::ALL.len() {
        parsed.values.complete(&annotator_id(client.model_name(), opts.method))
    } else {
        None
    };
    let cost = CostRecord {
        article_id: article.id.clone(),
        method: opts.method,
        queries: bundle.queries_needed,
        prompt_tokens,
        completion_tokens,
        parsed_ok: parsed.all_parsed(),
    };
    Ok((
        ArticleOutcome {
            article_id: article.id.clone(),
            method: opts.method,
            parsed,
            annotation,
            response: last,
        },
        cost,
    ))
}

/// One annotation attempt per article, results in corpus order. Parse
/// failures are recorded per slot; an endpoint failure (after the client's
/// retries) aborts the run.
pub fn run_pipeline(
    corpus: &Corpus,
    client: &dyn LlmClient,
    opts: &PipelineOptions<'_>,
) -> Result<PipelineRun, PipelineError> {
    if opts.max_in_flight == 0 {
        return Err(PipelineError::NoWorkers);
    }
    let counters = Counters {
        hits: AtomicUsize::new(0),
        requests: AtomicUsize::new(0),
    };
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<(ArticleOutcome, CostRecord), PipelineError>>>> =
        corpus.articles.iter().map(|_| Mutex::new(None)).collect();
    let workers = opts.max_in_flight.min(corpus.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(article) = corpus.articles.get(i) else {
                    break;
                };
                let r = annotate_one(article, corpus, client, opts, &counters);
                let failed = r.is_err();
                *results[i].lock().expect("result slot") = Some(r);
                if failed {
                    // Stop handing out new work after a hard failure.
                    next.store(corpus.len(), Ordering::SeqCst);
                }
            });
        }
    });
    let mut outcomes = Vec::with_capacity(corpus.len());
    let mut costs = Vec::with_capacity(corpus.len());
    for slot in results {
        match slot.into_inner().expect("result slot") {
            Some(Ok((o, c))) => {
                outcomes.push(o);
                costs.push(c);
            }
            Some(Err(e)) => return Err(e),
            None => {}
        }
    }
    Ok(PipelineRun {
        outcomes,
        costs,
        cache_hits: counters.hits.into_inner(),
        requests: counters.requests.into_inner(),
    })
}

/// Copy of the corpus whose annotations are replaced by the model's
/// (none where parsing was incomplete).
pub fn annotated_corpus(corpus: &Corpus, run: &PipelineRun) -> Corpus {
    let mut out = corpus.clone();
    for (article, outcome) in out.articles.iter_mut().zip(&run.outcomes) {
        debug_assert_eq!(article.id, outcome.article_id);
        if let Some(a) = &outcome.annotation {
            article.annotations = vec![a.clone()];
        } else {
            article.annotations.clear();
        }
    }
    out
}
