//! Token attribution: for each component t, token j scores
//! `‖∂‖F_t‖₁ / ∂x_j‖₂`, where `x_j` is the token's row of the input matrix.
//!
//! The heatmap is written as a JSON data file plus a static HTML page
//! (yellow = belief, red = desire, blue = plan; darker = higher).

use ndarray::Array2;
use nint_dmint::{Component, DmintModel, EncodedText, TokenMatrix};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

pub const HEATMAP_FORMAT: &str = "nint-attribution-heatmap";
pub const HEATMAP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentScores {
    pub belief: Vec<f64>,
    pub desire: Vec<f64>,
    pub plan: Vec<f64>,
}

impl ComponentScores {
    pub fn get(&self, c: Component) -> &[f64] {
        match c {
            Component::Belief => &self.belief,
            Component::Desire => &self.desire,
            Component::Plan => &self.plan,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenAttribution {
    pub article_id: String,
    pub tokens: Vec<String>,
    /// `false` marks padding.
    pub mask: Vec<bool>,
    pub scores: ComponentScores,
}

/// Scores for every token of `tm`, one vector per component.
pub fn attribute_matrix(model: &DmintModel, tm: &TokenMatrix) -> Result<[Vec<f64>; 3], EvalError> {
    let fwd = model.forward_matrix(tm)?;
    Ok(Component::ALL.map(|c| {
        let f = fwd.feature(c);
        // d‖F‖₁/dF = sign(F), with 0 at exact zeros.
        let upstream: Array2<f64> = f.mapv(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
        let dx = model.extractor_input_gradient(tm, &fwd, c, &upstream);
        dx.rows()
            .into_iter()
            .zip(&tm.mask)
            .map(|(row, keep)| if *keep { row.dot(&row).sqrt() } else { 0.0 })
            .collect()
    }))
}

pub fn attribute(model: &DmintModel, article_id: &str, text: &EncodedText) -> Result<TokenAttribution, EvalError> {
    let [belief, desire, plan] = attribute_matrix(model, &model.embed(text))?;
    Ok(TokenAttribution {
        article_id: article_id.to_string(),
        tokens: text.tokens.clone(),
        mask: text.mask.clone(),
        scores: ComponentScores { belief, desire, plan },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapDoc {
    pub format: String,
    pub version: u32,
    pub articles: Vec<TokenAttribution>,
}

impl HeatmapDoc {
    pub fn new(articles: Vec<TokenAttribution>) -> Self {
        Self {
            format: HEATMAP_FORMAT.to_string(),
            version: HEATMAP_VERSION,
            articles,
        }
    }
}

/// Checks a heatmap data file: header, field types, equal lengths, finite
/// non-negative scores and exact zeros on padding.
pub fn validate_heatmap(value: &serde_json::Value) -> Result<HeatmapDoc, EvalError> {
    let doc: HeatmapDoc = serde_json::from_value(value.clone()).map_err(|e| EvalError::Schema(e.to_string()))?;
    if doc.format != HEATMAP_FORMAT {
        return Err(EvalError::Schema(format!("format {:?}", doc.format)));
    }
    if doc.version != HEATMAP_VERSION {
        return Err(EvalError::Schema(format!("unsupported version {}", doc.version)));
    }
    for a in &doc.articles {
        let n = a.tokens.len();
        if a.mask.len() != n {
            return Err(EvalError::Schema(format!("{}: mask length {} vs {n} tokens", a.article_id, a.mask.len())));
        }
        for c in Component::ALL {
            let s = a.scores.get(c);
            if s.len() != n {
                return Err(EvalError::Schema(format!(
                    "{}: {} scores length {} vs {n} tokens",
                    a.article_id,
                    c.name(),
                    s.len()
                )));
            }
            for (j, (v, keep)) in s.iter().zip(&a.mask).enumerate() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(EvalError::Schema(format!("{}: {} score {v} at {j}", a.article_id, c.name())));
                }
                if !keep && *v != 0.0 {
                    return Err(EvalError::Schema(format!(
                        "{}: padding position {j} has {} score {v}",
                        a.article_id,
                        c.name()
                    )));
                }
            }
        }
    }
    Ok(doc)
}

fn color(c: Component) -> (u8, u8, u8) {
    match c {
        Component::Belief => (240, 200, 0),
        Component::Desire => (220, 30, 30),
        Component::Plan => (30, 90, 220),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(ch),
        }
    }
    out
}

/// One block per article with a row per component; shade opacity is the
/// score over the article's maximum for that component.
pub fn render_heatmap_html(doc: &HeatmapDoc) -> String {
    let mut html = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Token attribution</title>\n\
         <style>body{font-family:sans-serif}span.t{padding:1px 2px;margin:1px;display:inline-block}\
         .row{margin:4px 0}.lab{display:inline-block;width:5em;font-weight:bold}</style></head><body>\n",
    );
    html.push_str("<p>Legend: <span class=\"t\" style=\"background:rgb(240,200,0)\">belief</span>");
    html.push_str("<span class=\"t\" style=\"background:rgb(220,30,30)\">desire</span>");
    html.push_str("<span class=\"t\" style=\"background:rgb(30,90,220)\">plan</span></p>\n");
    for a in &doc.articles {
        html.push_str(&format!("<section><h2>{}</h2>\n", escape(&a.article_id)));
        for c in Component::ALL {
            let scores = a.scores.get(c);
            let max = scores.iter().cloned().fold(0.0, f64::max);
            let (r, g, b) = color(c);
            html.push_str(&format!("<div class=\"row\"><span class=\"lab\">{}</span>", c.name()));
            for ((tok, s), keep) in a.tokens.iter().zip(scores).zip(&a.mask) {
                if !keep {
                    continue;
                }
                let alpha = if max > 0.0 { s / max } else { 0.0 };
                html.push_str(&format!(
                    "<span class=\"t\" title=\"{s:.4e}\" style=\"background:rgba({r},{g},{b},{alpha:.3})\">{}</span>",
                    escape(tok)
                ));
            }
            html.push_str("</div>\n");
        }
        html.push_str("</section>\n");
    }
    html.push_str("</body></html>\n");
    html
}
