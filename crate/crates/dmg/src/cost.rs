//! Per-method query and token accounting.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::prompt::Method;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRecord {
    pub article_id: String,
    pub method: Method,
    pub queries: usize,
    /// Tokens sent, counting replayed conversation turns.
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
    pub parsed_ok: bool,
}

impl CostRecord {
    pub fn tokens(&self) -> usize {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub method: Method,
    pub records: usize,
    pub avg_queries: f64,
    /// Prompt plus completion tokens.
    pub avg_tokens: f64,
    pub avg_prompt_tokens: f64,
    pub avg_completion_tokens: f64,
    pub parse_rate: f64,
    pub macro_f1: Option<f64>,
    /// macro-F1 gain over the standard prompt per 100 average tokens.
    pub gain_per_100_tokens: Option<f64>,
}

impl CostRow {
    /// `DMG, 1, 213.0`: method, average queries, average tokens.
    pub fn summary_line(&self) -> String {
        format!("{}, {}, {:.1}", self.method.label(), round1(self.avg_queries), self.avg_tokens)
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub tokenizer: String,
    pub rows: Vec<CostRow>,
}

/// `(f1 - f1_standard) / (avg_tokens / 100)`.
pub fn gain_per_100_tokens(f1: f64, standard_f1: f64, avg_tokens: f64) -> f64 {
    (f1 - standard_f1) / (avg_tokens / 100.0)
}

/// Rows in method order for every method with records. Ratios need a score
/// for the method and for the standard prompt.
pub fn cost_report(records: &[CostRecord], scores: Option<&BTreeMap<Method, f64>>, tokenizer: &str) -> CostReport {
    let standard = scores.and_then(|s| s.get(&Method::Standard)).copied();
    let rows = Method::ALL
        .into_iter()
        .filter_map(|method| {
            let rs: Vec<&CostRecord> = records.iter().filter(|r| r.method == method).collect();
            if rs.is_empty() {
                return None;
            }
            let n = rs.len() as f64;
            let avg = |f: &dyn Fn(&CostRecord) -> usize| rs.iter().map(|r| f(r) as f64).sum::<f64>() / n;
            let avg_tokens = avg(&CostRecord::tokens);
            let macro_f1 = scores.and_then(|s| s.get(&method)).copied();
            let gain = match (macro_f1, standard) {
                (Some(f1), Some(base)) if avg_tokens > 0.0 => Some(gain_per_100_tokens(f1, base, avg_tokens)),
                _ => None,
            };
            Some(CostRow {
                method,
                records: rs.len(),
                avg_queries: avg(&|r| r.queries),
                avg_tokens,
                avg_prompt_tokens: avg(&|r| r.prompt_tokens),
                avg_completion_tokens: avg(&|r| r.completion_tokens),
                parse_rate: rs.iter().filter(|r| r.parsed_ok).count() as f64 / n,
                macro_f1,
                gain_per_100_tokens: gain,
            })
        })
        .collect();
    CostReport {
        tokenizer: tokenizer.to_string(),
        rows,
    }
}

impl CostReport {
    pub fn row(&self, method: Method) -> Option<&CostRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Averages to one decimal; ratios to three.
    pub fn render_csv(&self) -> String {
        let mut out = String::from(
            "method,records,avg_queries,avg_tokens,avg_prompt_tokens,avg_completion_tokens,parse_rate,macro_f1,gain_per_100_tokens,tokenizer\n",
        );
        let opt = |v: Option<f64>, digits: usize| v.map_or(String::new(), |v| format!("{v:.digits$}"));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.1},{:.1},{:.1},{:.1},{:.3},{},{},{}",
                r.method.label(),
                r.records,
                r.avg_queries,
                r.avg_tokens,
                r.avg_prompt_tokens,
                r.avg_completion_tokens,
                r.parse_rate,
                opt(r.macro_f1, 3),
                opt(r.gain_per_100_tokens, 3),
                self.tokenizer
            );
        }
        out
    }
}
