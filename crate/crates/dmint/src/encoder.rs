//! Text encoder: turns `topic [sep] title content` into a token matrix.
//!
//! Two backends are available. The hashed n-gram encoder maps every token to
//! the mean of trainable bucket embeddings for its unigram and the bigram
//! ending at it. The table encoder looks tokens up in a frozen word-vector
//! file; unknown words get the zero vector.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use nint_core::NewsArticle;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub const SEP_TOKEN: &str = "[sep]";
pub const PAD_TOKEN: &str = "[pad]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSpec {
    HashedNgram {
        buckets: usize,
        dim: usize,
        seed: u64,
        /// Longest word n-gram hashed per token (1 or 2).
        #[serde(default = "default_max_n")]
        max_n: usize,
    },
    PretrainedTable {
        path: PathBuf,
        dim: usize,
    },
}

fn default_max_n() -> usize {
    2
}

impl EncoderSpec {
    pub fn dim(&self) -> usize {
        match self {
            EncoderSpec::HashedNgram { dim, .. } | EncoderSpec::PretrainedTable { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            EncoderSpec::HashedNgram {
                buckets, dim, max_n, ..
            } => {
                if *buckets == 0 || *dim == 0 {
                    return Err(ModelError::Config("buckets and dim must be positive".into()));
                }
                if !(1..=2).contains(max_n) {
                    return Err(ModelError::Config(format!("max_n must be 1 or 2, got {max_n}")));
                }
            }
            EncoderSpec::PretrainedTable { dim, .. } => {
                if *dim == 0 {
                    return Err(ModelError::Config("dim must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Per-token input features, before embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum TokenFeatures {
    /// Bucket ids per token; an empty list embeds to zero.
    Hashed(Vec<Vec<usize>>),
    /// Fixed vectors, one row per token.
    Fixed(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedText {
    pub tokens: Vec<String>,
    pub features: TokenFeatures,
    /// `true` for real tokens, `false` for padding.
    pub mask: Vec<bool>,
}

impl EncodedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Appends padding positions up to `len`.
    pub fn pad_to(&mut self, len: usize) {
        let extra = len.saturating_sub(self.tokens.len());
        if extra == 0 {
            return;
        }
        self.tokens.extend(std::iter::repeat(PAD_TOKEN.to_string()).take(extra));
        self.mask.extend(std::iter::repeat(false).take(extra));
        match &mut self.features {
            TokenFeatures::Hashed(ids) => ids.extend(std::iter::repeat(Vec::new()).take(extra)),
            TokenFeatures::Fixed(rows) => {
                let mut grown = Array2::zeros((len, rows.ncols()));
                grown.slice_mut(ndarray::s![..rows.nrows(), ..]).assign(rows);
                *rows = grown;
            }
        }
    }
}

/// Embedded token sequence, shape `(L, d)`, with its padding mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    pub values: Array2<f64>,
    pub mask: Vec<bool>,
}

impl TokenMatrix {
    pub fn new(values: Array2<f64>, mask: Vec<bool>) -> Result<Self, ModelError> {
        if values.nrows() == 0 {
            return Err(ModelError::ShapeMismatch("token matrix has no rows".into()));
        }
        if mask.len() != values.nrows() {
            return Err(ModelError::ShapeMismatch(format!(
                "mask length {} vs {} rows",
                mask.len(),
                values.nrows()
            )));
        }
        if !mask.iter().any(|m| *m) {
            return Err(ModelError::ShapeMismatch("every position is masked".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::ShapeMismatch("non-finite token value".into()));
        }
        Ok(Self { values, mask })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Lowercased alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn fnv1a(seed: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        for b in part.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    spec: EncoderSpec,
    table: Option<HashMap<String, Vec<f64>>>,
}

impl Encoder {
    pub fn new(spec: EncoderSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let table = match &spec {
            EncoderSpec::HashedNgram { .. } => None,
            EncoderSpec::PretrainedTable { path, dim } => Some(load_vector_table(path, *dim)?),
        };
        Ok(Self { spec, table })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Whether the encoder owns a trainable embedding table.
    pub fn trainable_buckets(&self) -> Option<usize> {
        match self.spec {
            EncoderSpec::HashedNgram { buckets, .. } => Some(buckets),
            EncoderSpec::PretrainedTable { .. } => None,
        }
    }

    /// Stable fingerprint of the token-to-feature mapping: hashing
    /// parameters, or the sorted word list of a fixed table.
    pub fn fingerprint(&self) -> String {
        let mut parts: Vec<String> = vec![serde_json::to_string(&self.spec_without_path()).unwrap_or_default()];
        if let Some(table) = &self.table {
            let mut words: Vec<&String> = table.keys().collect();
            words.sort();
            parts.extend(words.into_iter().cloned());
        }
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        format!("{:016x}", fnv1a(0, &refs))
    }

    fn spec_without_path(&self) -> EncoderSpec {
        match &self.spec {
            EncoderSpec::PretrainedTable { dim, .. } => EncoderSpec::PretrainedTable {
                path: Default::default(),
                dim: *dim,
            },
            other => other.clone(),
        }
    }

    /// Token sequence `topic [sep] title content`, cut to `max_len` tokens.
    pub fn token_sequence(topic: &str, title: &str, content: &str, max_len: usize) -> Vec<String> {
        let mut tokens = tokenize(topic);
        tokens.push(SEP_TOKEN.to_string());
        tokens.extend(tokenize(title));
        tokens.extend(tokenize(content));
        tokens.truncate(max_len.max(1));
        tokens
    }

    pub fn encode_text(&self, topic: &str, title: &str, content: &str, max_len: usize) -> EncodedText {
        let tokens = Self::token_sequence(topic, title, content, max_len);
        let features = match (&self.spec, &self.table) {
            (EncoderSpec::HashedNgram {
                buckets, seed, max_n, ..
            }, _) => {
                let ids = tokens
                    .iter()
                    .enumerate()
                    .map(|(j, tok)| {
                        let bucket = |parts: &[&str]| (fnv1a(*seed, parts) % *buckets as u64) as usize;
                        let mut ids = vec![bucket(&[tok])];
                        if *max_n >= 2 && j > 0 && tok != SEP_TOKEN && tokens[j - 1] != SEP_TOKEN {
                            ids.push(bucket(&[&tokens[j - 1], tok]));
                        }
                        ids
                    })
                    .collect();
                TokenFeatures::Hashed(ids)
            }
            (EncoderSpec::PretrainedTable { dim, .. }, Some(table)) => {
                let mut rows = Array2::zeros((tokens.len(), *dim));
                for (j, tok) in tokens.iter().enumerate() {
                    if let Some(v) = table.get(tok) {
                        rows.row_mut(j).assign(&ndarray::ArrayView1::from(v.as_slice()));
                    }
                }
                TokenFeatures::Fixed(rows)
            }
            (EncoderSpec::PretrainedTable { .. }, None) => unreachable!("table loaded in new()"),
        };
        let mask = vec![true; tokens.len()];
        EncodedText {
            tokens,
            features,
            mask,
        }
    }

    pub fn encode_article(&self, article: &NewsArticle, max_len: usize) -> EncodedText {
        self.encode_text(&article.topic, &article.title, &article.content, max_len)
    }
}

/// Reads `word v1 … vd` lines. A leading `count dim` header line is skipped.
pub fn load_vector_table(path: &Path, dim: usize) -> Result<HashMap<String, Vec<f64>>, ModelError> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::TableLoad {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    parse_vector_table(&text, dim)
}

pub fn parse_vector_table(text: &str, dim: usize) -> Result<HashMap<String, Vec<f64>>, ModelError> {
    let mut table = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if idx == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            continue;
        }
        let err = |reason: String| ModelError::TableLoad {
            line: idx + 1,
            reason,
        };
        if fields.len() != dim + 1 {
            return Err(err(format!("expected {} values, found {}", dim, fields.len() - 1)));
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| err("non-numeric value".into()))?;
        table.insert(fields[0].to_lowercase(), values);
    }
    if table.is_empty() {
        return Err(ModelError::TableLoad {
            line: 0,
            reason: "no vectors".into(),
        });
    }
    Ok(table)
}
