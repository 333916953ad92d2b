//! Training configuration: every field has a declared default, and the hash
//! of the canonical JSON serialization stamps all outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::guidance::GuidanceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub env: String,
    pub seed: u64,
    pub total_steps: u64,
    /// Run a round of updates every this many environment steps.
    pub update_every: u64,
    /// K update iterations per round.
    pub updates_per_round: u64,
    pub eval_every: u64,
    pub eval_episodes: u32,
    /// Uniform-random action steps at the start (skipped while the gate is
    /// active; see action selection in the training loop).
    pub warmup_steps: u64,
    /// No gradient updates before this many environment steps.
    pub learning_starts: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
    pub lr: f64,
    /// Plain SGD instead of Adam (ablation flag).
    pub sgd: bool,
    /// Behavior-clone the policy mean head for this many epochs before RL.
    pub bc_pretrain_epochs: usize,
    pub demo_path: Option<PathBuf>,
    pub guidance: GuidanceConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            env: "mountain_car".to_string(),
            seed: 1,
            total_steps: 100_000,
            update_every: 50,
            updates_per_round: 50,
            eval_every: 1000,
            eval_episodes: 10,
            warmup_steps: 1000,
            learning_starts: 1000,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            hidden: vec![64, 64],
            gamma: 0.99,
            rho: 0.995,
            alpha: 0.2,
            lr: 3e-4,
            sgd: false,
            bc_pretrain_epochs: 0,
            demo_path: None,
            guidance: GuidanceConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::Config(
                "batch_size and buffer_capacity must be positive".to_string(),
            ));
        }
        if self.update_every == 0 || self.eval_every == 0 {
            return Err(Error::Config(
                "update_every and eval_every must be positive".to_string(),
            ));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1".to_string()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer sizes must be positive".to_string()));
        }
        if (self.guidance.enabled || self.bc_pretrain_epochs > 0) && self.demo_path.is_none() {
            return Err(Error::Config(
                "guidance or pretraining requires demo_path".to_string(),
            ));
        }
        Ok(())
    }

    /// Reads a TOML config file.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: TrainConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }
}

/// Named method presets used by comparisons: the guided learner, plain SAC,
/// and the pretraining baseline.
pub fn preset_config(method: &str, base: &TrainConfig) -> Result<TrainConfig> {
    let mut cfg = base.clone();
    match method {
        "drleg" => {
            cfg.guidance.enabled = true;
            cfg.bc_pretrain_epochs = 0;
        }
        "sac" => {
            cfg.guidance.enabled = false;
            cfg.bc_pretrain_epochs = 0;
        }
        "sac_pretrain" => {
            cfg.guidance.enabled = false;
            if cfg.bc_pretrain_epochs == 0 {
                cfg.bc_pretrain_epochs = 200;
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown method '{other}' (expected drleg, sac, or sac_pretrain)"
            )))
        }
    }
    Ok(cfg)
}
