//! Id-keyed feature vectors, stored one JSON record per line:
//! `{"id": "a01", "features": [0.1, -2.0, ...]}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nint_core::NewsArticle;
use nint_dmint::DmintModel;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Which DMINT representation feeds the fusion head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentSource {
    /// The aggregated intent feature F_I.
    #[default]
    Intent,
    /// `[F_B, F_D, F_P, F_I]`.
    Concat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureRecord {
    id: String,
    features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
}

impl FeatureSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, features: Vec<f64>) -> Result<(), EvalError> {
        let id = id.into();
        if features.len() != self.dim {
            return Err(EvalError::Shape(format!(
                "{id}: {} features, expected {}",
                features.len(),
                self.dim
            )));
        }
        self.rows.insert(id, features);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    /// Ids in sorted order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
            path: shown.clone(),
            source,
        })?;
        let mut set: Option<FeatureSet> = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| EvalError::Io {
                path: shown.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: FeatureRecord = serde_json::from_str(&line).map_err(|source| EvalError::Json {
                path: shown.clone(),
                line: i + 1,
                source,
            })?;
            set.get_or_insert_with(|| FeatureSet::new(rec.features.len()))
                .insert(rec.id, rec.features)?;
        }
        Ok(set.unwrap_or_default())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let path = path.as_ref();
        let io = |source| EvalError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for (id, features) in &self.rows {
            let rec = FeatureRecord {
                id: id.clone(),
                features: features.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec).expect("plain record")).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// Runs the model over each article and collects the requested features.
pub fn intent_features(
    model: &DmintModel,
    articles: &[NewsArticle],
    source: IntentSource,
) -> Result<FeatureSet, EvalError> {
    let c = model.config().intent_dim;
    let dim = match source {
        IntentSource::Intent => c,
        IntentSource::Concat => 4 * c,
    };
    let mut set = FeatureSet::new(dim);
    for article in articles {
        let fwd = model.forward(&model.encode_article(article))?;
        let mut v: Vec<f64> = Vec::with_capacity(dim);
        if source == IntentSource::Concat {
            for f in &fwd.features {
                v.extend(f.iter());
            }
        }
        v.extend(fwd.intent.iter());
        set.insert(article.id.clone(), v)?;
    }
    Ok(set)
}
