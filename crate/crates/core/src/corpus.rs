//! News article records, the line-delimited corpus file format, train/val/test
//! splitting and descriptive statistics.
//!
//! One record per line, UTF-8 JSON, with the fields
//! `id, title, content, topic, domain, date, author, url, subreddit, posts, labels`.
//! `date` is an ISO-8601 calendar date. `labels` holds a single annotation
//! object or an array of them. Unknown fields are rejected.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{IntentAnnotation, Vocabulary};

/// A problem with one line of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} invalid record(s): {}", .0.len(), join_errors(.0))]
    Records(Vec<RecordError>),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
}

fn join_errors(errors: &[RecordError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Post {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub timestamp: String,
    #[serde(default)]
    pub reply_depth: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SocialContext {
    pub subreddit: Option<String>,
    pub posts: Vec<Post>,
}

impl SocialContext {
    /// Deepest reply level in the article's discussion thread, 0 when empty.
    pub fn max_reply_depth(&self) -> u32 {
        self.posts.iter().map(|p| p.reply_depth).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewsArticle {
    pub id: String,
    pub title: String,
    pub content: String,
    pub topic: String,
    pub domain: String,
    pub date: NaiveDate,
    pub author: Option<String>,
    pub url: Option<String>,
    pub social: SocialContext,
    pub annotations: Vec<IntentAnnotation>,
}

impl NewsArticle {
    /// First annotation, which is the gold/aggregated one by convention.
    pub fn primary_annotation(&self) -> Option<&IntentAnnotation> {
        self.annotations.first()
    }

    pub fn content_tokens(&self) -> usize {
        self.content.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelsField {
    One(Box<IntentAnnotation>),
    Many(Vec<IntentAnnotation>),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date: Option<String>,
    #[serde(default)]
    author: Option<String>,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    subreddit: Option<String>,
    #[serde(default)]
    posts: Vec<Post>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<LabelsField>,
}

impl Record {
    fn into_article(self, vocab: &Vocabulary) -> Result<NewsArticle, String> {
        fn required(field: Option<String>, name: &str) -> Result<String, String> {
            field.ok_or_else(|| format!("missing {name}"))
        }
        let id = required(self.id, "id")?;
        if id.trim().is_empty() {
            return Err("empty id".into());
        }
        let content = required(self.content, "content")?;
        if content.trim().is_empty() {
            return Err("empty content".into());
        }
        let raw_date = required(self.date, "date")?;
        let date = NaiveDate::parse_from_str(raw_date.trim(), "%Y-%m-%d")
            .map_err(|e| format!("unparseable date {raw_date:?}: {e}"))?;
        let annotations = match self.labels {
            None => Vec::new(),
            Some(LabelsField::One(a)) => vec![*a],
            Some(LabelsField::Many(list)) => list,
        };
        for ann in &annotations {
            ann.validate(vocab).map_err(|e| e.to_string())?;
        }
        Ok(NewsArticle {
            id,
            title: required(self.title, "title")?,
            content,
            topic: required(self.topic, "topic")?,
            domain: required(self.domain, "domain")?,
            date,
            author: self.author,
            url: self.url,
            social: SocialContext {
                subreddit: self.subreddit,
                posts: self.posts,
            },
            annotations,
        })
    }

    fn from_article(article: &NewsArticle) -> Self {
        let labels = match article.annotations.len() {
            0 => None,
            1 => Some(LabelsField::One(Box::new(article.annotations[0].clone()))),
            _ => Some(LabelsField::Many(article.annotations.clone())),
        };
        Record {
            id: Some(article.id.clone()),
            title: Some(article.title.clone()),
            content: Some(article.content.clone()),
            topic: Some(article.topic.clone()),
            domain: Some(article.domain.clone()),
            date: Some(article.date.format("%Y-%m-%d").to_string()),
            author: article.author.clone(),
            url: article.url.clone(),
            subreddit: article.social.subreddit.clone(),
            posts: article.social.posts.clone(),
            labels,
        }
    }
}

/// Parses one record line.
pub fn parse_record(line: &str, vocab: &Vocabulary) -> Result<NewsArticle, String> {
    let record: Record = serde_json::from_str(line).map_err(|e| e.to_string())?;
    record.into_article(vocab)
}

/// Serializes one article as a single record line (no trailing newline).
pub fn render_record(article: &NewsArticle) -> String {
    serde_json::to_string(&Record::from_article(article)).expect("record serialization")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub articles: Vec<NewsArticle>,
    pub vocab: Vocabulary,
}

impl Corpus {
    pub fn new(articles: Vec<NewsArticle>, vocab: Vocabulary) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for a in &articles {
            if !seen.insert(a.id.as_str()) {
                return Err(CorpusError::DuplicateId(a.id.clone()));
            }
        }
        Ok(Self { articles, vocab })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&NewsArticle> {
        self.articles.iter().find(|a| a.id == id)
    }

    fn subset(&self, articles: Vec<NewsArticle>) -> Corpus {
        Corpus {
            articles,
            vocab: self.vocab.clone(),
        }
    }
}

/// Reads a corpus, reporting every invalid line. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    read_corpus(BufReader::new(file), vocab).map_err(|e| match e {
        CorpusError::Io { source, .. } => io_err(source),
        other => other,
    })
}

pub fn read_corpus(reader: impl BufRead, vocab: &Vocabulary) -> Result<Corpus, CorpusError> {
    let mut articles = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, vocab) {
            Ok(article) => {
                if !seen.insert(article.id.clone()) {
                    errors.push(RecordError::DuplicateId {
                        line: line_no,
                        id: article.id,
                    });
                } else {
                    articles.push(article);
                }
            }
            Err(reason) => errors.push(RecordError::Parse {
                line: line_no,
                reason,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(CorpusError::Records(errors));
    }
    Ok(Corpus {
        articles,
        vocab: vocab.clone(),
    })
}

pub fn write_corpus(corpus: &Corpus, writer: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for a in &corpus.articles {
        writeln!(w, "{}", render_record(a))?;
    }
    w.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_corpus(corpus, file).map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum SplitMode {
    Temporal,
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            mode: SplitMode::Temporal,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        for (name, f) in [
            ("train", self.train_frac),
            ("val", self.val_frac),
            ("test", self.test_frac),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(CorpusError::InvalidSplit(format!(
                    "{name} fraction {f} outside (0, 1)"
                )));
            }
        }
        let total = self.train_frac + self.val_frac + self.test_frac;
        if (total - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplit(format!("fractions sum to {total}")));
        }
        Ok(())
    }

    /// Partition sizes for `n` items: val and test get the floor of their
    /// share, train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let val = floor(self.val_frac);
        let test = floor(self.test_frac);
        (n - val - test, val, test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
}

/// Splits by publication date (ascending, ties by id) into contiguous
/// train/val/test blocks, or by a seeded shuffle in `Random` mode.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<Splits, CorpusError> {
    spec.validate()?;
    let mut ordered: Vec<&NewsArticle> = corpus.articles.iter().collect();
    ordered.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.id.cmp(&b.id)));
    if let SplitMode::Random(seed) = spec.mode {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ordered.shuffle(&mut rng);
    }
    let (n_train, n_val, _) = spec.sizes(ordered.len());
    let take = |range: std::ops::Range<usize>| -> Vec<NewsArticle> {
        ordered[range].iter().map(|a| (*a).clone()).collect()
    };
    Ok(Splits {
        train: corpus.subset(take(0..n_train)),
        val: corpus.subset(take(n_train..n_train + n_val)),
        test: corpus.subset(take(n_train + n_val..ordered.len())),
    })
}

/// Temporal split; `spec.mode` is ignored.
pub fn temporal_split(corpus: &Corpus, spec: &SplitSpec) -> Result<Splits, CorpusError> {
    split(
        corpus,
        &SplitSpec {
            mode: SplitMode::Temporal,
            ..*spec
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Subreddit,
    Domain,
    Polarity,
}

impl std::str::FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subreddit" => Ok(GroupBy::Subreddit),
            "domain" => Ok(GroupBy::Domain),
            "polarity" => Ok(GroupBy::Polarity),
            other => Err(format!("cannot group by {other:?}")),
        }
    }
}

/// Totals for one group; averages are derived from exact integer sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsRow {
    pub group: String,
    pub count: u64,
    pub total_tokens: u64,
    pub total_posts: u64,
}

impl StatsRow {
    pub fn avg_len(&self) -> f64 {
        self.total_tokens as f64 / self.count as f64
    }

    pub fn avg_posts(&self) -> f64 {
        self.total_posts as f64 / self.count as f64
    }
}

impl fmt::Display for StatsRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:.2},{:.2}",
            self.group,
            self.count,
            self.avg_len(),
            self.avg_posts()
        )
    }
}

pub const NO_GROUP: &str = "(none)";

/// One row per group value, sorted by group name. Lengths are whitespace
/// token counts of the article content.
pub fn corpus_stats(corpus: &Corpus, group_by: GroupBy) -> Vec<StatsRow> {
    let mut groups: BTreeMap<String, StatsRow> = BTreeMap::new();
    for a in &corpus.articles {
        let key = match group_by {
            GroupBy::Subreddit => a.social.subreddit.clone(),
            GroupBy::Domain => Some(a.domain.clone()).filter(|d| !d.is_empty()),
            GroupBy::Polarity => a
                .primary_annotation()
                .map(|ann| ann.polarity.polarity.render().to_string()),
        }
        .unwrap_or_else(|| NO_GROUP.to_string());
        let row = groups.entry(key.clone()).or_insert_with(|| StatsRow {
            group: key,
            count: 0,
            total_tokens: 0,
            total_posts: 0,
        });
        row.count += 1;
        row.total_tokens += a.content_tokens() as u64;
        row.total_posts += a.social.posts.len() as u64;
    }
    groups.into_values().collect()
}

pub fn render_stats_csv(rows: &[StatsRow]) -> String {
    let mut out = String::from("group,count,avg_len,avg_posts\n");
    for row in rows {
        out.push_str(&row.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::fixtures::big_tech_annotation;

    fn article(id: &str, date: &str, content: &str) -> NewsArticle {
        NewsArticle {
            id: id.into(),
            title: format!("title {id}"),
            content: content.into(),
            topic: "topic".into(),
            domain: "example.com".into(),
            date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            author: None,
            url: None,
            social: SocialContext::default(),
            annotations: Vec::new(),
        }
    }

    fn line(id: &str) -> String {
        format!(
            r#"{{"id":"{id}","title":"t","content":"some words here","topic":"x","domain":"d.com","date":"2021-01-0{}"}}"#,
            id.len()
        )
    }

    #[test]
    fn loads_valid_lines() {
        let text = [line("a"), line("bb"), line("ccc")].join("\n");
        let corpus = read_corpus(text.as_bytes(), &Vocabulary::default()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.articles[2].id, "ccc");
    }

    #[test]
    fn missing_content_reports_line() {
        let bad = r#"{"id":"b","title":"t","topic":"x","domain":"d.com","date":"2021-01-01"}"#;
        let text = [line("a"), bad.to_string(), line("ccc")].join("\n");
        let err = read_corpus(text.as_bytes(), &Vocabulary::default()).unwrap_err();
        match err {
            CorpusError::Records(errs) => assert_eq!(
                errs,
                vec![RecordError::Parse {
                    line: 2,
                    reason: "missing content".into()
                }]
            ),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_ids_and_bad_dates_rejected() {
        let bad_date = r#"{"id":"z","title":"t","content":"c","topic":"x","domain":"d","date":"19/08/2020"}"#;
        let text = [line("a"), line("a"), bad_date.to_string()].join("\n");
        let err = read_corpus(text.as_bytes(), &Vocabulary::default()).unwrap_err();
        let CorpusError::Records(errs) = err else { panic!() };
        assert_eq!(
            errs[0],
            RecordError::DuplicateId {
                line: 2,
                id: "a".into()
            }
        );
        assert!(matches!(&errs[1], RecordError::Parse { line: 3, reason } if reason.contains("unparseable date")));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"id":"a","title":"t","content":"c","topic":"x","domain":"d","date":"2020-01-01","extra":1}"#;
        assert!(read_corpus(text.as_bytes(), &Vocabulary::default()).is_err());
    }

    #[test]
    fn labelled_instance_round_trips() {
        let mut a = article("bigtech", "2020-08-19", "American tech titans flew high before the coronavirus pandemic, making billions...");
        a.title = "Big Tech\u{2019}s Domination of Business...".into();
        a.domain = "nytimes.com".into();
        a.author = Some("Peter Eavis".into());
        a.url = Some("https://www.nytimes.com/".into());
        a.social = SocialContext {
            subreddit: Some("LockdownCriticalLeft".into()),
            posts: vec![Post {
                id: "gloapg3".into(),
                text: "The fact that this has to be explained is what's crazy...".into(),
                timestamp: "2020-11-18 02:25:16".into(),
                reply_depth: 0,
            }],
        };
        a.annotations = vec![big_tech_annotation()];
        let line = render_record(&a);
        let back = parse_record(&line, &Vocabulary::default()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn temporal_split_ten_months() {
        let articles: Vec<_> = (1..=10)
            .map(|m| article(&format!("a{m:02}"), &format!("2020-{m:02}-01"), "x"))
            .collect();
        let corpus = Corpus::new(articles, Vocabulary::default()).unwrap();
        let s = temporal_split(&corpus, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
        assert_eq!(s.test.articles[0].id, "a10");
    }

    #[test]
    fn same_date_split_uses_id_order() {
        let articles: Vec<_> = (0..10)
            .rev()
            .map(|i| article(&format!("id{i}"), "2020-05-05", "x"))
            .collect();
        let corpus = Corpus::new(articles, Vocabulary::default()).unwrap();
        let s = temporal_split(&corpus, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
        assert_eq!(s.val.articles[0].id, "id8");
        assert_eq!(s.test.articles[0].id, "id9");
    }

    /// Rounding oracle using exact integer arithmetic on percentages.
    #[test]
    fn split_sizes_match_integer_oracle() {
        for (tr, va, te) in [(60u64, 20u64, 20u64), (80, 10, 10), (70, 15, 15), (50, 25, 25)] {
            let spec = SplitSpec {
                train_frac: tr as f64 / 100.0,
                val_frac: va as f64 / 100.0,
                test_frac: te as f64 / 100.0,
                mode: SplitMode::Temporal,
            };
            for n in 1..=10u64 {
                let val = (n * va / 100) as usize;
                let test = (n * te / 100) as usize;
                let expected = (n as usize - val - test, val, test);
                assert_eq!(spec.sizes(n as usize), expected, "n={n} spec={spec:?}");
            }
        }
        let spec = SplitSpec {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            mode: SplitMode::Temporal,
        };
        assert_eq!(spec.sizes(5), (3, 1, 1));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let spec = SplitSpec {
            train_frac: 0.5,
            val_frac: 0.1,
            test_frac: 0.1,
            mode: SplitMode::Temporal,
        };
        assert!(matches!(spec.validate(), Err(CorpusError::InvalidSplit(_))));
    }

    #[test]
    fn random_split_is_seeded_partition() {
        let articles: Vec<_> = (0..20)
            .map(|i| article(&format!("r{i:02}"), "2020-01-01", "x"))
            .collect();
        let corpus = Corpus::new(articles, Vocabulary::default()).unwrap();
        let spec = SplitSpec {
            mode: SplitMode::Random(7),
            ..SplitSpec::default()
        };
        let a = split(&corpus, &spec).unwrap();
        let b = split(&corpus, &spec).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<_> = [&a.train, &a.val, &a.test]
            .iter()
            .flat_map(|c| c.articles.iter().map(|x| x.id.clone()))
            .collect();
        ids.sort();
        assert_eq!(ids.len(), 20);
        ids.dedup();
        assert_eq!(ids.len(), 20);
    }

    #[test]
    fn stats_single_and_pair() {
        let mut a = article("a", "2020-01-01", "one two three four five six seven eight nine ten");
        a.social.subreddit = Some("news".into());
        a.social.posts = vec![
            Post { id: "p1".into(), text: String::new(), timestamp: String::new(), reply_depth: 0 },
            Post { id: "p2".into(), text: String::new(), timestamp: String::new(), reply_depth: 1 },
        ];
        let corpus = Corpus::new(vec![a.clone()], Vocabulary::default()).unwrap();
        let rows = corpus_stats(&corpus, GroupBy::Subreddit);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].to_string(), "news,1,10.00,2.00");

        let mut b = article("b", "2020-01-02", &vec!["w"; 20].join(" "));
        b.social.subreddit = Some("news".into());
        let corpus = Corpus::new(vec![a, b], Vocabulary::default()).unwrap();
        let rows = corpus_stats(&corpus, GroupBy::Subreddit);
        assert_eq!(rows[0].avg_len(), 15.0);
        assert_eq!(rows[0].to_string(), "news,2,15.00,1.00");
    }
}
