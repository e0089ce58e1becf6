//! JSON checkpoints: config echo, encoder fingerprint and named tensors.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{DmintModel, ModelConfig};
use crate::params::ParamStore;

pub const CHECKPOINT_FORMAT: &str = "nint-dmint-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub encoder_fingerprint: String,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn of(model: &DmintModel) -> Self {
        let tensors = model
            .params()
            .iter()
            .map(|(name, t)| TensorRecord {
                name: name.to_string(),
                shape: [t.nrows(), t.ncols()],
                values: t.iter().copied().collect(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: model.config().clone(),
            encoder_fingerprint: model.encoder().fingerprint(),
            tensors,
        }
    }

    pub fn into_model(self) -> Result<DmintModel, ModelError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(ModelError::Checkpoint(format!("unknown format {:?}", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let mut store = ParamStore::new();
        for t in self.tensors {
            let values = Array2::from_shape_vec((t.shape[0], t.shape[1]), t.values)
                .map_err(|e| ModelError::Checkpoint(format!("tensor {}: {e}", t.name)))?;
            store.add(t.name, values);
        }
        let model = DmintModel::from_parts(self.config, store)?;
        if model.encoder().fingerprint() != self.encoder_fingerprint {
            return Err(ModelError::Checkpoint("encoder vocabulary differs from the one trained with".into()));
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &DmintModel, path: &Path) -> Result<(), ModelError> {
    let json = serde_json::to_string(&Checkpoint::of(model)).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    Ok(fs::write(path, json)?)
}

pub fn load_checkpoint(path: &Path) -> Result<DmintModel, ModelError> {
    let text = fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    ckpt.into_model()
}
