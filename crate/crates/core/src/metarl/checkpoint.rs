use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::policy::{Block, Layout, RecurrentPolicy};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorDump {
    pub name: Block,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// JSON tensor dump with explicit shapes and a content hash over the raw parameter bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub action_dim: usize,
    pub tensors: Vec<TensorDump>,
    pub content_hash: String,
}

fn content_hash(params: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in params {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Checkpoint {
    pub fn from_policy(p: &RecurrentPolicy) -> Self {
        let tensors = Block::ALL
            .iter()
            .map(|&b| {
                let (r, c) = p.layout.shape(b);
                TensorDump {
                    name: b,
                    shape: [r, c],
                    data: p.block(b).to_vec(),
                }
            })
            .collect();
        Self {
            version: CHECKPOINT_VERSION,
            input_dim: p.layout.input,
            hidden_dim: p.layout.hidden,
            action_dim: p.layout.actions,
            tensors,
            content_hash: content_hash(&p.params),
        }
    }

    pub fn into_policy(self) -> Result<RecurrentPolicy> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let layout = Layout {
            input: self.input_dim,
            hidden: self.hidden_dim,
            actions: self.action_dim,
        };
        let mut p = RecurrentPolicy::zeros(layout.input, layout.hidden, layout.actions);
        for b in Block::ALL {
            let t = self
                .tensors
                .iter()
                .find(|t| t.name == b)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {b:?}")))?;
            let (r, c) = layout.shape(b);
            if t.shape != [r, c] || t.data.len() != r * c {
                return Err(Error::Checkpoint(format!(
                    "tensor {b:?} has shape {:?}, expected [{r}, {c}]",
                    t.shape
                )));
            }
            p.block_mut(b).copy_from_slice(&t.data);
        }
        let h = content_hash(&p.params);
        if h != self.content_hash {
            return Err(Error::Checkpoint(format!(
                "content hash mismatch: stored {}, computed {h}",
                self.content_hash
            )));
        }
        Ok(p)
    }

    pub fn hash(&self) -> &str {
        &self.content_hash
    }
}

pub fn save_checkpoint(p: &RecurrentPolicy, path: &Path) -> Result<String> {
    let ck = Checkpoint::from_policy(p);
    std::fs::write(path, serde_json::to_string(&ck)?)?;
    Ok(ck.content_hash)
}

pub fn load_checkpoint(path: &Path) -> Result<RecurrentPolicy> {
    let text = std::fs::read_to_string(path)?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    ck.into_policy()
}
