//! JSON checkpoints: an architecture descriptor plus the flat parameter
//! values. Values are written with shortest round-trip formatting and parsed
//! with correct rounding, so reloading is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::Architecture;
use super::network::{PolicyHead, PolicyNetwork, ValueNetwork};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "repaint-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkDescriptor {
    Policy { architecture: Architecture, head: PolicyHead },
    Value { architecture: Architecture },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub network: NetworkDescriptor,
    pub values: Vec<f64>,
}

impl Checkpoint {
    pub fn from_policy(net: &PolicyNetwork) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            network: NetworkDescriptor::Policy {
                architecture: net.architecture().clone(),
                head: net.head(),
            },
            values: net.params().as_slice().to_vec(),
        }
    }

    pub fn from_value(net: &ValueNetwork) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            network: NetworkDescriptor::Value {
                architecture: net.architecture().clone(),
            },
            values: net.params().as_slice().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::contract(format!("unexpected checkpoint format `{}`", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::contract(format!("unsupported checkpoint version {}", ckpt.version)));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn into_policy(self) -> Result<PolicyNetwork> {
        match self.network {
            NetworkDescriptor::Policy { architecture, head } => {
                PolicyNetwork::from_parts(architecture, head, self.values)
            }
            NetworkDescriptor::Value { .. } => Err(Error::contract("checkpoint holds a value network")),
        }
    }

    pub fn into_value(self) -> Result<ValueNetwork> {
        match self.network {
            NetworkDescriptor::Value { architecture } => ValueNetwork::from_parts(architecture, self.values),
            NetworkDescriptor::Policy { .. } => Err(Error::contract("checkpoint holds a policy network")),
        }
    }
}

pub fn save_policy(net: &PolicyNetwork, path: &Path) -> Result<()> {
    Checkpoint::from_policy(net).save(path)
}

pub fn load_policy(path: &Path) -> Result<PolicyNetwork> {
    Checkpoint::load(path)?.into_policy()
}
