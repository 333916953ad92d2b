//! Checkpoint bundle: the five networks, their optimizer states, and the
//! hash of the config that produced them. Loading verifies the hash.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{AdamCheckpoint, Mlp, MlpCheckpoint, Optimizer};

use super::critics::SoftCritics;
use super::policy::GaussianPolicy;

pub const BUNDLE_VERSION: u32 = 1;

/// Serialized optimizer: Adam moments or the bare SGD learning rate.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerCheckpoint {
    Adam(AdamCheckpoint),
    Sgd { lr: f64 },
}

impl OptimizerCheckpoint {
    pub fn from_optimizer(opt: &Optimizer) -> Self {
        match opt {
            Optimizer::Adam(state) => OptimizerCheckpoint::Adam(AdamCheckpoint::from_state(state)),
            Optimizer::Sgd { lr } => OptimizerCheckpoint::Sgd { lr: *lr },
        }
    }

    pub fn into_optimizer(self, net: &Mlp) -> Result<Optimizer> {
        Ok(match self {
            OptimizerCheckpoint::Adam(ck) => Optimizer::Adam(ck.into_state(net)?),
            OptimizerCheckpoint::Sgd { lr } => Optimizer::Sgd { lr },
        })
    }
}

/// Everything needed to resume or re-evaluate a learner.
#[derive(Serialize, Deserialize)]
pub struct CheckpointBundle {
    pub version: u32,
    pub config_hash: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub obs_scale: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub policy: MlpCheckpoint,
    pub q1: MlpCheckpoint,
    pub q2: MlpCheckpoint,
    pub v: MlpCheckpoint,
    pub v_target: MlpCheckpoint,
    pub opt_policy: OptimizerCheckpoint,
    pub opt_q1: OptimizerCheckpoint,
    pub opt_q2: OptimizerCheckpoint,
    pub opt_v: OptimizerCheckpoint,
}

/// The live learner state a bundle captures.
pub struct LearnerState {
    pub policy: GaussianPolicy,
    pub critics: SoftCritics,
    pub opt_policy: Optimizer,
    pub opt_q1: Optimizer,
    pub opt_q2: Optimizer,
    pub opt_v: Optimizer,
}

impl CheckpointBundle {
    #[allow(clippy::too_many_arguments)]
    pub fn capture(
        config_hash: &str,
        action_low: &[f64],
        action_high: &[f64],
        state: &LearnerState,
    ) -> Self {
        Self {
            version: BUNDLE_VERSION,
            config_hash: config_hash.to_string(),
            obs_dim: state.policy.obs_dim(),
            act_dim: state.policy.act_dim(),
            action_low: action_low.to_vec(),
            action_high: action_high.to_vec(),
            obs_scale: state.policy.obs_scale().to_vec(),
            alpha: state.critics.alpha,
            gamma: state.critics.gamma,
            rho: state.critics.rho,
            policy: MlpCheckpoint::from_net(state.policy.trunk()),
            q1: MlpCheckpoint::from_net(&state.critics.q1),
            q2: MlpCheckpoint::from_net(&state.critics.q2),
            v: MlpCheckpoint::from_net(&state.critics.v),
            v_target: MlpCheckpoint::from_net(&state.critics.v_target),
            opt_policy: OptimizerCheckpoint::from_optimizer(&state.opt_policy),
            opt_q1: OptimizerCheckpoint::from_optimizer(&state.opt_q1),
            opt_q2: OptimizerCheckpoint::from_optimizer(&state.opt_q2),
            opt_v: OptimizerCheckpoint::from_optimizer(&state.opt_v),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bundle: CheckpointBundle = serde_json::from_str(&text)?;
        if bundle.version != BUNDLE_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint bundle version {}",
                bundle.version
            )));
        }
        Ok(bundle)
    }

    /// Rebuilds the learner, verifying the recorded config hash first.
    pub fn restore(self, expected_config_hash: &str) -> Result<LearnerState> {
        if self.config_hash != expected_config_hash {
            return Err(Error::Config(format!(
                "checkpoint was produced by config {} but {} was requested",
                self.config_hash, expected_config_hash
            )));
        }
        self.restore_unchecked()
    }

    /// Rebuilds the learner without hash verification (evaluation of foreign
    /// checkpoints).
    pub fn restore_unchecked(self) -> Result<LearnerState> {
        let trunk = self.policy.into_net()?;
        // Seed value is irrelevant: every parameter is overwritten.
        let mut scratch_rng = crate::numerics::Rng::new(0);
        let hidden: Vec<usize> = {
            let sizes = trunk.layer_sizes();
            sizes[1..sizes.len() - 1].to_vec()
        };
        let mut policy = GaussianPolicy::new(
            self.obs_dim,
            self.act_dim,
            &hidden,
            &self.action_low,
            &self.action_high,
            &mut scratch_rng,
        )?;
        policy.set_trunk(trunk)?;
        policy.set_obs_scale(self.obs_scale.clone())?;

        let mut critics = SoftCritics::new(
            self.obs_dim,
            self.act_dim,
            &hidden,
            self.alpha,
            self.gamma,
            self.rho,
            &mut scratch_rng,
        )?;
        critics.set_obs_scale(self.obs_scale.clone())?;
        critics.q1 = self.q1.into_net()?;
        critics.q2 = self.q2.into_net()?;
        critics.v = self.v.into_net()?;
        critics.v_target = self.v_target.into_net()?;

        let opt_policy = self.opt_policy.into_optimizer(policy.trunk())?;
        let opt_q1 = self.opt_q1.into_optimizer(&critics.q1)?;
        let opt_q2 = self.opt_q2.into_optimizer(&critics.q2)?;
        let opt_v = self.opt_v.into_optimizer(&critics.v)?;
        Ok(LearnerState {
            policy,
            critics,
            opt_policy,
            opt_q1,
            opt_q2,
            opt_v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn learner(seed: u64) -> LearnerState {
        let mut rng = Rng::new(seed);
        let policy = GaussianPolicy::new(2, 1, &[8, 8], &[-1.0], &[1.0], &mut rng).unwrap();
        let critics = SoftCritics::new(2, 1, &[8, 8], 0.2, 0.99, 0.995, &mut rng).unwrap();
        LearnerState {
            opt_policy: Optimizer::adam(policy.trunk(), 3e-4),
            opt_q1: Optimizer::adam(&critics.q1, 3e-4),
            opt_q2: Optimizer::adam(&critics.q2, 3e-4),
            opt_v: Optimizer::adam(&critics.v, 3e-4),
            policy,
            critics,
        }
    }

    #[test]
    fn roundtrip_preserves_networks_exactly() {
        let state = learner(4);
        let bundle = CheckpointBundle::capture("abc123", &[-1.0], &[1.0], &state);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.json");
        bundle.save(&path).unwrap();
        let restored = CheckpointBundle::load(&path)
            .unwrap()
            .restore("abc123")
            .unwrap();
        assert_eq!(restored.policy.trunk(), state.policy.trunk());
        assert_eq!(restored.critics.q1, state.critics.q1);
        assert_eq!(restored.critics.q2, state.critics.q2);
        assert_eq!(restored.critics.v, state.critics.v);
        assert_eq!(restored.critics.v_target, state.critics.v_target);
    }

    #[test]
    fn hash_mismatch_is_rejected() {
        let state = learner(5);
        let bundle = CheckpointBundle::capture("abc123", &[-1.0], &[1.0], &state);
        assert!(bundle.restore("different").is_err());
    }
}
