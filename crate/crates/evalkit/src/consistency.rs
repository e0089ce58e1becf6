//! Internal and external consistency tables: how often each belief stance
//! and each desire co-occurs with an unfair plan, and how desires relate to
//! discussion volume and depth.

use std::collections::BTreeSet;

use nint_core::{Corpus, Desire, Fairness, IntentAnnotation, NewsArticle, Stance};
use serde::Serialize;

use crate::error::EvalError;
use crate::stats::zscore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    EmptyGroup,
    ZeroVariance,
}

impl CellFlag {
    fn as_str(self) -> &'static str {
        match self {
            CellFlag::EmptyGroup => "empty_group",
            CellFlag::ZeroVariance => "zero_variance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionRow {
    pub group: String,
    pub articles: usize,
    pub unfair: usize,
    /// `None` when the group is empty.
    pub proportion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngagementRow {
    pub topic: Option<String>,
    pub desire: Desire,
    pub articles: usize,
    pub avg_posts: Option<f64>,
    /// Mean over articles of each article's deepest reply level.
    pub avg_reply_depth: Option<f64>,
    /// Standardized across the desire categories of the same topic.
    pub z_posts: Option<f64>,
    pub z_reply_depth: Option<f64>,
    pub flags: Vec<CellFlag>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsistencyOptions {
    /// Use this annotator's labels; the first annotation otherwise.
    pub annotator: Option<String>,
    pub by_topic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyTables {
    pub by_belief: Vec<ProportionRow>,
    pub by_desire: Vec<ProportionRow>,
    pub engagement: Vec<EngagementRow>,
    /// Articles without a usable annotation.
    pub skipped: Vec<String>,
}

fn proportion_row(group: &str, anns: &[&IntentAnnotation]) -> ProportionRow {
    let unfair = anns.iter().filter(|a| a.plan.fairness == Fairness::Unfair).count();
    ProportionRow {
        group: group.to_string(),
        articles: anns.len(),
        unfair,
        proportion: (!anns.is_empty()).then(|| unfair as f64 / anns.len() as f64),
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn engagement_rows(topic: Option<&str>, labelled: &[(&NewsArticle, &IntentAnnotation)]) -> Vec<EngagementRow> {
    let mut rows: Vec<EngagementRow> = Desire::ALL
        .iter()
        .map(|&desire| {
            let members: Vec<&NewsArticle> = labelled
                .iter()
                .filter(|(a, ann)| topic.map_or(true, |t| a.topic == t) && ann.desire.categories.contains(&desire))
                .map(|(a, _)| *a)
                .collect();
            let posts: Vec<f64> = members.iter().map(|a| a.social.posts.len() as f64).collect();
            let depth: Vec<f64> = members.iter().map(|a| f64::from(a.social.max_reply_depth())).collect();
            EngagementRow {
                topic: topic.map(str::to_string),
                desire,
                articles: members.len(),
                avg_posts: mean(&posts),
                avg_reply_depth: mean(&depth),
                z_posts: None,
                z_reply_depth: None,
                flags: if members.is_empty() { vec![CellFlag::EmptyGroup] } else { Vec::new() },
            }
        })
        .collect();
    let filled: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].articles > 0).collect();
    let column = |rows: &[EngagementRow], f: fn(&EngagementRow) -> Option<f64>| -> Vec<f64> {
        filled.iter().map(|&i| f(&rows[i]).expect("non-empty group")).collect()
    };
    let posts = zscore(&column(&rows, |r| r.avg_posts));
    let depth = zscore(&column(&rows, |r| r.avg_reply_depth));
    for (k, &i) in filled.iter().enumerate() {
        match &posts {
            Ok(z) => rows[i].z_posts = Some(z[k]),
            Err(_) => rows[i].flags.push(CellFlag::ZeroVariance),
        }
        match &depth {
            Ok(z) => rows[i].z_reply_depth = Some(z[k]),
            Err(_) if posts.is_ok() => rows[i].flags.push(CellFlag::ZeroVariance),
            Err(_) => {}
        }
    }
    rows
}

pub fn consistency_tables(corpus: &Corpus, opts: &ConsistencyOptions) -> ConsistencyTables {
    let mut labelled = Vec::new();
    let mut skipped = Vec::new();
    for article in &corpus.articles {
        let ann = match &opts.annotator {
            Some(name) => article.annotations.iter().find(|a| &a.annotator_id == name),
            None => article.primary_annotation(),
        };
        match ann {
            Some(ann) => labelled.push((article, ann)),
            None => skipped.push(article.id.clone()),
        }
    }
    let by_belief = Stance::ALL
        .iter()
        .map(|&s| {
            let anns: Vec<&IntentAnnotation> =
                labelled.iter().map(|(_, a)| *a).filter(|a| a.belief.stance == s).collect();
            proportion_row(s.render(), &anns)
        })
        .collect();
    let by_desire = Desire::ALL
        .iter()
        .map(|&d| {
            let anns: Vec<&IntentAnnotation> = labelled
                .iter()
                .map(|(_, a)| *a)
                .filter(|a| a.desire.categories.contains(&d))
                .collect();
            proportion_row(d.render(), &anns)
        })
        .collect();
    let engagement = if opts.by_topic {
        let topics: BTreeSet<&str> = labelled.iter().map(|(a, _)| a.topic.as_str()).collect();
        topics
            .into_iter()
            .flat_map(|t| engagement_rows(Some(t), &labelled))
            .collect()
    } else {
        engagement_rows(None, &labelled)
    };
    ConsistencyTables {
        by_belief,
        by_desire,
        engagement,
        skipped,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn render_proportions_csv(key: &str, rows: &[ProportionRow]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([key, "articles", "unfair", "proportion_unfair", "flag"])?;
    for r in rows {
        let flag = if r.proportion.is_none() { CellFlag::EmptyGroup.as_str() } else { "" };
        w.write_record([&r.group, &r.articles.to_string(), &r.unfair.to_string(), &opt(r.proportion), flag])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv"))
}

pub fn render_engagement_csv(rows: &[EngagementRow]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "topic",
        "desire",
        "articles",
        "avg_posts",
        "avg_reply_depth",
        "z_posts",
        "z_reply_depth",
        "flags",
    ])?;
    for r in rows {
        let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
        w.write_record([
            r.topic.as_deref().unwrap_or(""),
            r.desire.render(),
            &r.articles.to_string(),
            &opt(r.avg_posts),
            &opt(r.avg_reply_depth),
            &opt(r.z_posts),
            &opt(r.z_reply_depth),
            &flags.join(";"),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv"))
}
