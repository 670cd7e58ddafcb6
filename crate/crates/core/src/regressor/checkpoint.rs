//! JSON checkpoints keyed by tensor name.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::skeleton::SkeletonTopology;

use super::network::{ModelConfig, RegressorParams};
use super::RegressorError;

pub const CHECKPOINT_FORMAT: &str = "fbipose-checkpoint/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub topology_version: String,
    pub seed: u64,
    pub config: ModelConfig,
    /// Trainable tensors and normalization running statistics.
    pub tensors: BTreeMap<String, StoredTensor>,
}

impl Checkpoint {
    pub fn from_params(params: &RegressorParams, seed: u64) -> Self {
        let tensors = params
            .tensors()
            .into_iter()
            .map(|t| (t.name, StoredTensor { shape: t.shape, data: t.data.to_vec() }))
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            topology_version: params.topology_version.clone(),
            seed,
            config: params.config.clone(),
            tensors,
        }
    }

    pub fn into_params(self) -> Result<RegressorParams, RegressorError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(RegressorError::Checkpoint(format!("unsupported format {:?}", self.format)));
        }
        let expected = SkeletonTopology::mpii().version();
        if self.topology_version != expected {
            return Err(RegressorError::TopologyMismatch {
                expected: expected.to_string(),
                found: self.topology_version,
            });
        }
        let mut params = RegressorParams::zeros(self.config);
        let mut tensors = self.tensors;
        for t in params.tensors_mut() {
            let stored = tensors
                .remove(&t.name)
                .ok_or_else(|| RegressorError::Checkpoint(format!("missing tensor {}", t.name)))?;
            if stored.shape != t.shape || stored.data.len() != t.data.len() {
                return Err(RegressorError::Checkpoint(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    t.name, stored.shape, t.shape
                )));
            }
            t.data.copy_from_slice(&stored.data);
        }
        if let Some(name) = tensors.keys().next() {
            return Err(RegressorError::Checkpoint(format!("unexpected tensor {name}")));
        }
        params.check_finite()?;
        Ok(params)
    }
}

pub fn save_checkpoint(params: &RegressorParams, seed: u64, path: &Path) -> Result<(), RegressorError> {
    let json = serde_json::to_string(&Checkpoint::from_params(params, seed))
        .map_err(|e| RegressorError::Checkpoint(e.to_string()))?;
    fs::write(path, json).map_err(|e| RegressorError::Checkpoint(format!("{}: {e}", path.display())))
}

/// Returns the parameters and the seed they were trained with.
pub fn load_checkpoint(path: &Path) -> Result<(RegressorParams, u64), RegressorError> {
    let text = fs::read_to_string(path).map_err(|e| RegressorError::Checkpoint(format!("{}: {e}", path.display())))?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| RegressorError::Checkpoint(e.to_string()))?;
    let seed = ckpt.seed;
    Ok((ckpt.into_params()?, seed))
}
