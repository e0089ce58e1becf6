//! One function per subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use nint_core::agreement::{
    landis_koch, render_verification_csv, verification_report, AgreementSummary, ItemVotes, RatingTable,
};
use nint_core::corpus::{corpus_stats, load_corpus, render_stats_csv, save_corpus, split, GroupBy, Splits};
use nint_core::metrics::classification_metrics;
use nint_core::{Corpus, Desire, Fairness, Polarity, Stance};
use nint_dmg::{
    annotated_corpus, connect, cost_report, run_pipeline, EndpointConfig, LlmClient, Method, PipelineOptions,
    ResponseCache, WhitespaceTokens,
};
use nint_dmint::{evaluate, load_checkpoint, save_checkpoint, train, DmintModel, Example, Task, Variant};
use nint_eval::attribution::HeatmapDoc;
use nint_eval::consistency::{render_engagement_csv, render_proportions_csv};
use nint_eval::features::FeatureSet;
use nint_eval::fusion::FusionRun;
use nint_eval::{
    attribute, consistency_tables, fuse_and_train, intent_features, render_heatmap_html, validate_heatmap,
    ConsistencyOptions, Targets,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::manifest::RunContext;
use crate::{Command, GroupByArg, Part};

pub fn dispatch(command: &Command, ctx: &mut RunContext) -> Result<(), CliError> {
    match command {
        Command::Validate => validate(ctx),
        Command::Split => split_cmd(ctx),
        Command::Stats { group_by } => stats(ctx, group_by),
        Command::Annotate { .. } => annotate(ctx),
        Command::Agree { table } => agree(ctx, table.as_deref()),
        Command::Verify { votes } => verify(ctx, votes),
        Command::Train { .. } => train_cmd(ctx),
        Command::Eval { checkpoint, part } => eval_cmd(ctx, checkpoint, *part),
        Command::Ablate { variant } => ablate(ctx, variant),
        Command::Fuse {
            task_features,
            labels,
            intent_features,
            checkpoint,
        } => fuse(ctx, task_features, labels, intent_features.as_deref(), checkpoint.as_deref()),
        Command::Attribute { checkpoint, limit } => attribute_cmd(ctx, checkpoint, *limit),
        Command::Analyze { .. } => analyze(ctx),
        Command::CostReport { runs, gold, scores } => cost_report_cmd(ctx, runs, gold.as_deref(), scores.as_deref()),
    }
}

fn load(ctx: &mut RunContext) -> Result<Corpus, CliError> {
    let path = ctx.config.corpus_path()?.to_path_buf();
    ctx.input(&path)?;
    Ok(load_corpus(&path, &ctx.config.vocabulary()?)?)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable record"));
        out.push('\n');
    }
    out
}

fn save_split(ctx: &mut RunContext, name: &str, corpus: &Corpus) -> Result<(), CliError> {
    let path = ctx.target(name)?;
    save_corpus(corpus, &path)?;
    ctx.record_output(path);
    Ok(())
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    articles: usize,
    annotated_articles: usize,
    annotations: usize,
    topics: BTreeSet<String>,
    first_date: Option<String>,
    last_date: Option<String>,
}

fn validate(ctx: &mut RunContext) -> Result<(), CliError> {
    let corpus = load(ctx)?;
    let dates: Vec<_> = corpus.articles.iter().map(|a| a.date).collect();
    let report = ValidationReport {
        articles: corpus.len(),
        annotated_articles: corpus.articles.iter().filter(|a| !a.annotations.is_empty()).count(),
        annotations: corpus.articles.iter().map(|a| a.annotations.len()).sum(),
        topics: corpus.articles.iter().map(|a| a.topic.clone()).collect(),
        first_date: dates.iter().min().map(|d| d.to_string()),
        last_date: dates.iter().max().map(|d| d.to_string()),
    };
    ctx.write_json("validation.json", &report)?;
    Ok(())
}

fn splits(ctx: &mut RunContext) -> Result<Splits, CliError> {
    let corpus = load(ctx)?;
    Ok(split(&corpus, &ctx.config.split)?)
}

#[derive(Debug, Serialize)]
struct SplitPart {
    articles: usize,
    first_date: Option<String>,
    last_date: Option<String>,
}

fn part_summary(c: &Corpus) -> SplitPart {
    SplitPart {
        articles: c.len(),
        first_date: c.articles.iter().map(|a| a.date).min().map(|d| d.to_string()),
        last_date: c.articles.iter().map(|a| a.date).max().map(|d| d.to_string()),
    }
}

fn split_cmd(ctx: &mut RunContext) -> Result<(), CliError> {
    let s = splits(ctx)?;
    save_split(ctx, "train.jsonl", &s.train)?;
    save_split(ctx, "val.jsonl", &s.val)?;
    save_split(ctx, "test.jsonl", &s.test)?;
    let summary: BTreeMap<&str, SplitPart> = [
        ("train", part_summary(&s.train)),
        ("val", part_summary(&s.val)),
        ("test", part_summary(&s.test)),
    ]
    .into_iter()
    .collect();
    ctx.write_json("split.json", &summary)?;
    Ok(())
}

fn stats(ctx: &mut RunContext, group_by: &[GroupByArg]) -> Result<(), CliError> {
    let corpus = load(ctx)?;
    let groups = if group_by.is_empty() {
        vec![GroupByArg::Subreddit, GroupByArg::Domain, GroupByArg::Polarity]
    } else {
        group_by.to_vec()
    };
    for g in groups {
        let (key, name) = match g {
            GroupByArg::Subreddit => (GroupBy::Subreddit, "subreddit"),
            GroupByArg::Domain => (GroupBy::Domain, "domain"),
            GroupByArg::Polarity => (GroupBy::Polarity, "polarity"),
        };
        let csv = render_stats_csv(&corpus_stats(&corpus, key));
        ctx.write(&format!("stats_{name}.csv"), csv)?;
    }
    Ok(())
}

/// Per-article result of an annotation run, used by `cost-report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub id: String,
    pub method: Method,
    pub polarity: Option<Polarity>,
    pub failed_slots: Vec<nint_core::LabelSlot>,
}

#[derive(Debug, Serialize)]
struct AnnotateSummary {
    method: Method,
    model: String,
    articles: usize,
    complete_annotations: usize,
    parse_failures: usize,
    requests: usize,
    cache_hits: usize,
}

fn annotate(ctx: &mut RunContext) -> Result<(), CliError> {
    let corpus = load(ctx)?;
    let endpoint: EndpointConfig = ctx
        .config
        .endpoint
        .clone()
        .ok_or_else(|| CliError::Config("no endpoint: set [endpoint] or pass --endpoint".into()))?;
    if let Some(dir) = endpoint.base_url.strip_prefix(nint_dmg::endpoint::MOCK_PREFIX) {
        ctx.input(Path::new(dir))?;
    }
    let client: Box<dyn LlmClient> = connect(&endpoint)?;
    let cache_dir = ctx.config.paths.cache.clone().unwrap_or_else(|| ctx.path("cache"));
    let cache = ResponseCache::open(&cache_dir).map_err(CliError::io(&cache_dir))?;
    let method = ctx.config.annotate.method;
    let opts = PipelineOptions {
        method,
        token_budget: ctx.config.annotate.token_budget,
        max_in_flight: endpoint.max_in_flight,
        tokens: &WhitespaceTokens,
        cache: Some(&cache),
    };
    let run = run_pipeline(&corpus, client.as_ref(), &opts)?;
    let labelled = annotated_corpus(&corpus, &run);
    save_split(ctx, "annotations.jsonl", &labelled)?;
    let failures = run.failures();
    ctx.write("parse_failures.jsonl", jsonl(&failures))?;
    ctx.write("costs.jsonl", jsonl(&run.costs))?;
    let outcomes = run.outcomes.iter().map(|o| OutcomeRecord {
        id: o.article_id.clone(),
        method: o.method,
        polarity: o.parsed.values.polarity,
        failed_slots: o.parsed.failed_slots(),
    });
    ctx.write("outcomes.jsonl", jsonl(outcomes))?;
    let summary = AnnotateSummary {
        method,
        model: client.model_name().to_string(),
        articles: corpus.len(),
        complete_annotations: run.outcomes.iter().filter(|o| o.annotation.is_some()).count(),
        parse_failures: failures.len(),
        requests: run.requests,
        cache_hits: run.cache_hits,
    };
    ctx.write_json("annotate.json", &summary)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    counts: Vec<Vec<u64>>,
}

/// CSV rows of counts (a non-numeric first line is a header) or JSON.
fn read_table(path: &Path) -> Result<RatingTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let bad = |message: String| CliError::Input {
        path: path.display().to_string(),
        message,
    };
    let counts = if text.trim_start().starts_with('{') {
        serde_json::from_str::<TableFile>(&text).map_err(|e| bad(e.to_string()))?.counts
    } else {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Result<Vec<u64>, _> = line.split(',').map(|c| c.trim().parse::<u64>()).collect();
            match cells {
                Ok(r) => rows.push(r),
                Err(_) if rows.is_empty() && i == 0 => continue,
                Err(e) => return Err(bad(format!("line {}: {e}", i + 1))),
            }
        }
        rows
    };
    Ok(RatingTable::new(counts)?)
}

#[derive(Debug, Serialize)]
struct AgreementRow {
    name: String,
    #[serde(flatten)]
    summary: AgreementSummary,
    interpretation: &'static str,
}

/// Category index per annotation for each single-choice dimension, and a
/// binary table per desire category.
fn corpus_tables(corpus: &Corpus) -> Result<(Vec<(String, RatingTable)>, usize, usize), CliError> {
    let multi: Vec<_> = corpus.articles.iter().filter(|a| a.annotations.len() >= 2).collect();
    let raters = multi.iter().map(|a| a.annotations.len()).min().ok_or_else(|| {
        CliError::Config("agree needs --table or a corpus with at least two annotations per article".into())
    })?;
    let skipped = corpus.len() - multi.len();
    let mut tables = Vec::new();
    let mut add = |name: String, categories: usize, value: &dyn Fn(&nint_core::IntentAnnotation) -> usize| {
        let counts = multi
            .iter()
            .map(|a| {
                let mut row = vec![0u64; categories];
                for ann in &a.annotations[..raters] {
                    row[value(ann)] += 1;
                }
                row
            })
            .collect();
        RatingTable::new(counts).map(|t| tables.push((name, t)))
    };
    add("belief".into(), 3, &|a| Stance::ALL.iter().position(|s| *s == a.belief.stance).unwrap())?;
    add("plan".into(), 2, &|a| usize::from(a.plan.fairness == Fairness::Unfair))?;
    for d in Desire::ALL {
        add(format!("desire:{}", d.render()), 2, &|a| usize::from(a.desire.categories.contains(&d)))?;
    }
    add("polarity".into(), 2, &|a| usize::from(a.polarity.polarity == Polarity::Unharmful))?;
    Ok((tables, raters, skipped))
}

fn agree(ctx: &mut RunContext, table: Option<&Path>) -> Result<(), CliError> {
    let tables = match table {
        Some(path) => {
            ctx.input(path)?;
            vec![("table".to_string(), read_table(path)?)]
        }
        None => {
            let corpus = load(ctx)?;
            let (tables, raters, skipped) = corpus_tables(&corpus)?;
            log::info!("agreement over {raters} raters; {skipped} articles with fewer than two annotations skipped");
            tables
        }
    };
    let rows: Vec<AgreementRow> = tables
        .iter()
        .map(|(name, t)| {
            let summary = AgreementSummary::of(t);
            AgreementRow {
                name: name.clone(),
                interpretation: landis_koch(summary.fleiss_kappa),
                summary,
            }
        })
        .collect();
    let mut csv = String::from(
        "name,items,raters,categories,fleiss_kappa,degenerate,free_marginal_kappa,pairwise_agreement,interpretation\n",
    );
    for r in &rows {
        let s = &r.summary;
        csv.push_str(&format!(
            "{},{},{},{},{:.4},{},{:.4},{:.4},{}\n",
            r.name,
            s.items,
            s.raters,
            s.categories,
            s.fleiss_kappa,
            s.degenerate,
            s.free_marginal_kappa,
            s.pairwise_agreement,
            r.interpretation
        ));
    }
    ctx.write("agreement.csv", csv)?;
    ctx.write_json("agreement.json", &rows)?;
    Ok(())
}

fn verify(ctx: &mut RunContext, votes: &Path) -> Result<(), CliError> {
    ctx.input(votes)?;
    let items: Vec<ItemVotes> = read_jsonl(votes)?;
    let rows = verification_report(&items)?;
    ctx.write("verification.csv", render_verification_csv(&rows))?;
    ctx.write_json("verification.json", &rows)?;
    Ok(())
}

fn examples(model: &DmintModel, corpus: &Corpus) -> Result<Vec<Example>, CliError> {
    Ok(corpus.articles.iter().map(|a| model.example(a)).collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize)]
struct TrainReport {
    variant: Variant,
    train_articles: usize,
    val_articles: usize,
    test_articles: usize,
    outcome: nint_dmint::TrainOutcome,
    test: Option<nint_dmint::EvalReport>,
}

fn train_variant(ctx: &mut RunContext, s: &Splits, variant: Variant) -> Result<(DmintModel, TrainReport), CliError> {
    let mut model = DmintModel::new(ctx.config.model.ablate(variant))?;
    let (tr, va, te) = (examples(&model, &s.train)?, examples(&model, &s.val)?, examples(&model, &s.test)?);
    let outcome = train(&mut model, &tr, &va, &ctx.config.train)?;
    let test = if te.is_empty() { None } else { Some(evaluate(&model, &te)?) };
    let report = TrainReport {
        variant,
        train_articles: tr.len(),
        val_articles: va.len(),
        test_articles: te.len(),
        outcome,
        test,
    };
    Ok((model, report))
}

fn train_cmd(ctx: &mut RunContext) -> Result<(), CliError> {
    let s = splits(ctx)?;
    let variant = ctx.config.model.variant;
    let (model, report) = train_variant(ctx, &s, variant)?;
    let path = ctx.target("checkpoint.json")?;
    save_checkpoint(&model, &path)?;
    ctx.record_output(path);
    let mut csv = String::from("epoch,train_loss,val_polarity_macro_f1\n");
    for h in &report.outcome.history {
        let f1 = h.val_polarity_macro_f1.map_or(String::new(), |v| format!("{v:.6}"));
        csv.push_str(&format!("{},{:.8},{}\n", h.epoch, h.train_loss, f1));
    }
    ctx.write("history.csv", csv)?;
    ctx.write_json("train.json", &report)?;
    Ok(())
}

fn eval_cmd(ctx: &mut RunContext, checkpoint: &Path, part: Part) -> Result<(), CliError> {
    ctx.input(checkpoint)?;
    let model = load_checkpoint(checkpoint)?;
    let corpus = match part {
        Part::All => load(ctx)?,
        _ => {
            let s = splits(ctx)?;
            match part {
                Part::Train => s.train,
                Part::Val => s.val,
                _ => s.test,
            }
        }
    };
    let report = evaluate(&model, &examples(&model, &corpus)?)?;
    ctx.write_json("eval.json", &report)?;
    Ok(())
}

const ALL_VARIANTS: [Variant; 6] = [
    Variant::Full,
    Variant::WoMve,
    Variant::WoIa,
    Variant::WoB,
    Variant::WoD,
    Variant::WoP,
];

fn ablate(ctx: &mut RunContext, variants: &[Variant]) -> Result<(), CliError> {
    let s = splits(ctx)?;
    if s.test.is_empty() {
        return Err(CliError::Config("ablation needs a non-empty test split".into()));
    }
    let variants = if variants.is_empty() { ALL_VARIANTS.to_vec() } else { variants.to_vec() };
    let mut csv = String::from("variant,belief_f1,desire_f1,plan_f1,polarity_f1,polarity_acc,best_epoch\n");
    let mut reports = Vec::new();
    for v in variants {
        let (_, report) = train_variant(ctx, &s, v)?;
        let t = report.test.as_ref().expect("non-empty test split");
        csv.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{}\n",
            serde_json::to_value(v).unwrap().as_str().unwrap(),
            t.task(Task::Belief).macro_f1,
            t.task(Task::Desire).macro_f1,
            t.task(Task::Plan).macro_f1,
            t.task(Task::Polarity).macro_f1,
            t.task(Task::Polarity).accuracy,
            report.outcome.best_epoch
        ));
        reports.push(report);
    }
    ctx.write("ablation.csv", csv)?;
    ctx.write_json("ablation.json", &reports)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRecord {
    id: String,
    label: Option<usize>,
    value: Option<f64>,
    split: Option<String>,
}

#[derive(Debug, Serialize)]
struct FusionSide {
    input_dim: usize,
    final_train_loss: f64,
    report: nint_eval::TaskReport,
}

impl From<&FusionRun> for FusionSide {
    fn from(r: &FusionRun) -> Self {
        Self {
            input_dim: r.input_dim,
            final_train_loss: r.final_train_loss,
            report: r.report.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct FusionReport {
    intent_source: nint_eval::IntentSource,
    train_articles: usize,
    test_articles: usize,
    fused: FusionSide,
    control: FusionSide,
    macro_f1_gain: Option<f64>,
    rmse_reduction: Option<f64>,
}

fn fuse(
    ctx: &mut RunContext,
    task_path: &Path,
    labels_path: &Path,
    intent_path: Option<&Path>,
    checkpoint: Option<&Path>,
) -> Result<(), CliError> {
    ctx.input(task_path)?;
    ctx.input(labels_path)?;
    let task = FeatureSet::load(task_path)?;
    let records: Vec<LabelRecord> = read_jsonl(labels_path)?;
    let bad = |message: String| CliError::Input {
        path: labels_path.display().to_string(),
        message,
    };
    let targets = if records.iter().all(|r| r.label.is_some() && r.value.is_none()) {
        let labels: BTreeMap<String, usize> = records.iter().map(|r| (r.id.clone(), r.label.unwrap())).collect();
        let classes = labels.values().max().map_or(0, |m| m + 1).max(2);
        Targets::Classes {
            labels,
            classes,
            positive_class: 1,
        }
    } else if records.iter().all(|r| r.value.is_some() && r.label.is_none()) {
        Targets::Values(records.iter().map(|r| (r.id.clone(), r.value.unwrap())).collect())
    } else {
        return Err(bad("every record needs exactly one of \"label\" or \"value\", consistently".into()));
    };

    let intent = match (intent_path, checkpoint) {
        (Some(p), _) => {
            ctx.input(p)?;
            FeatureSet::load(p)?
        }
        (None, Some(ckpt)) => {
            ctx.input(ckpt)?;
            let model = load_checkpoint(ckpt)?;
            let corpus = load(ctx)?;
            let set = intent_features(&model, &corpus.articles, ctx.config.fusion.intent_source)?;
            let path = ctx.target("intent_features.jsonl")?;
            set.save(&path)?;
            ctx.record_output(path);
            set
        }
        (None, None) => return Err(CliError::Config("fuse needs --intent-features or --checkpoint".into())),
    };

    let (train_ids, test_ids) = if records.iter().any(|r| r.split.is_some()) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for r in &records {
            match r.split.as_deref() {
                Some("train") | Some("val") => train.push(r.id.clone()),
                Some("test") => test.push(r.id.clone()),
                other => return Err(bad(format!("{}: split {other:?}; expected train, val or test", r.id))),
            }
        }
        (train, test)
    } else if ctx.config.paths.corpus.is_some() {
        let s = splits(ctx)?;
        let ids = |c: &Corpus| c.articles.iter().map(|a| a.id.clone()).collect::<Vec<_>>();
        let mut train = ids(&s.train);
        train.extend(ids(&s.val));
        (train, ids(&s.test))
    } else {
        let mut ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
        ids.sort();
        let (n_train, n_val, _) = ctx.config.split.sizes(ids.len());
        let test = ids.split_off(n_train + n_val);
        (ids, test)
    };

    let out = fuse_and_train(&intent, &task, &targets, &train_ids, &test_ids, &ctx.config.fusion)?;
    let f1 = |r: &FusionRun| r.report.macro_f1();
    let rmse = |r: &FusionRun| r.report.rmse();
    let report = FusionReport {
        intent_source: ctx.config.fusion.intent_source,
        train_articles: train_ids.len(),
        test_articles: test_ids.len(),
        macro_f1_gain: f1(&out.fused).zip(f1(&out.control)).map(|(a, b)| a - b),
        rmse_reduction: rmse(&out.fused).zip(rmse(&out.control)).map(|(a, b)| b - a),
        fused: (&out.fused).into(),
        control: (&out.control).into(),
    };
    ctx.write_json("fusion.json", &report)?;
    Ok(())
}

fn attribute_cmd(ctx: &mut RunContext, checkpoint: &Path, limit: Option<usize>) -> Result<(), CliError> {
    ctx.input(checkpoint)?;
    let model = load_checkpoint(checkpoint)?;
    let corpus = load(ctx)?;
    let take = limit.unwrap_or(corpus.len());
    let mut items = Vec::new();
    for a in corpus.articles.iter().take(take) {
        let mut text = model.encode_article(a);
        text.pad_to(model.config().max_len);
        items.push(attribute(&model, &a.id, &text)?);
    }
    let doc = HeatmapDoc::new(items);
    let value = serde_json::to_value(&doc).expect("serializable heatmap");
    validate_heatmap(&value)?;
    ctx.write_json("attribution.json", &value)?;
    ctx.write("attribution.html", render_heatmap_html(&doc))?;
    Ok(())
}

fn analyze(ctx: &mut RunContext) -> Result<(), CliError> {
    let corpus = load(ctx)?;
    let opts = ConsistencyOptions {
        annotator: ctx.config.analysis.annotator.clone(),
        by_topic: ctx.config.analysis.by_topic,
    };
    let t = consistency_tables(&corpus, &opts);
    ctx.write("unfair_by_belief.csv", render_proportions_csv("belief", &t.by_belief)?)?;
    ctx.write("unfair_by_desire.csv", render_proportions_csv("desire", &t.by_desire)?)?;
    ctx.write("engagement_by_desire.csv", render_engagement_csv(&t.engagement)?)?;
    ctx.write_json("analysis.json", &t)?;
    Ok(())
}

/// Polarity macro-F1 per method; a missing prediction counts as wrong.
fn polarity_scores(
    outcomes: &[OutcomeRecord],
    gold: &Corpus,
) -> Result<BTreeMap<Method, f64>, CliError> {
    let mut by_method: BTreeMap<Method, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for o in outcomes {
        let Some(g) = gold.get(&o.id).and_then(|a| a.primary_annotation()) else {
            continue;
        };
        let g = g.polarity.polarity as usize;
        let p = o.polarity.map_or(1 - g, |p| p as usize);
        let e = by_method.entry(o.method).or_default();
        e.0.push(p);
        e.1.push(g);
    }
    by_method
        .into_iter()
        .map(|(m, (p, g))| Ok((m, classification_metrics(&p, &g, 2, 0).map_err(nint_eval::EvalError::from)?.macro_f1)))
        .collect()
}

fn cost_report_cmd(
    ctx: &mut RunContext,
    runs: &[PathBuf],
    gold: Option<&Path>,
    scores: Option<&Path>,
) -> Result<(), CliError> {
    let mut records = Vec::new();
    let mut outcomes = Vec::new();
    for dir in runs {
        let costs = dir.join("costs.jsonl");
        ctx.input(&costs)?;
        records.extend(read_jsonl::<nint_dmg::CostRecord>(&costs)?);
        let out = dir.join("outcomes.jsonl");
        if out.exists() {
            ctx.input(&out)?;
            outcomes.extend(read_jsonl::<OutcomeRecord>(&out)?);
        }
    }
    let mut f1 = match gold {
        Some(path) => {
            ctx.input(path)?;
            let gold = load_corpus(path, &ctx.config.vocabulary()?)?;
            polarity_scores(&outcomes, &gold)?
        }
        None => BTreeMap::new(),
    };
    if let Some(path) = scores {
        ctx.input(path)?;
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let given: BTreeMap<Method, f64> = serde_json::from_str(&text).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        f1.extend(given);
    }
    let report = cost_report(&records, (!f1.is_empty()).then_some(&f1), "whitespace");
    ctx.write("cost_report.csv", report.render_csv())?;
    ctx.write_json("cost_report.json", &report)?;
    Ok(())
}
