//! The action-selection gate: when demonstrations still outperform the
//! policy and the discriminator recognizes the state, the guider's action
//! replaces the policy sample.

use serde::{Deserialize, Serialize};

use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::replay::DemoSet;
use crate::sac::GaussianPolicy;

use super::bc::{train_bc_guider, BcGuider};
use super::functional::{FunctionalDiscriminator, FunctionalGuider};
use super::gmm::{fit_gmm, GmmDiscriminator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminatorKind {
    Functional,
    Gmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuiderKind {
    Functional,
    Bc,
}

/// Variant selection and the knobs each variant needs. The functional pair is
/// the default at the 1000-pair demo budget; GMM and BC are kept selectable
/// for ablations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceConfig {
    pub enabled: bool,
    pub discriminator: DiscriminatorKind,
    pub guider: GuiderKind,
    /// Distance threshold T₂ in normalized units (functional discriminator).
    pub t2: f64,
    /// Component count K for the GMM discriminator.
    pub gmm_components: usize,
    pub gmm_max_iters: usize,
    pub gmm_tol: f64,
    /// Guider noise σ; `None` means 0.1 × half the action range, per
    /// dimension.
    pub guider_sigma: Option<f64>,
    pub bc_epochs: usize,
    pub bc_lr: f64,
    pub bc_batch_size: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            discriminator: DiscriminatorKind::Functional,
            guider: GuiderKind::Functional,
            t2: 0.2,
            gmm_components: 8,
            gmm_max_iters: 200,
            gmm_tol: 1e-6,
            guider_sigma: None,
            bc_epochs: 200,
            bc_lr: 1e-3,
            bc_batch_size: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Discriminator {
    Functional(FunctionalDiscriminator),
    Gmm(GmmDiscriminator),
}

impl Discriminator {
    pub fn discriminate(&self, state: &[f64]) -> Result<bool> {
        match self {
            Discriminator::Functional(d) => d.discriminate(state),
            Discriminator::Gmm(d) => d.discriminate(state),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Guider {
    Functional(FunctionalGuider),
    Bc(BcGuider),
}

impl Guider {
    pub fn guide(&self, state: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            Guider::Functional(g) => g.guide(state, rng),
            Guider::Bc(g) => g.guide(state),
        }
    }
}

/// Gate state: fires only when `enabled ∧ r_demo > r_pi ∧ D(s)`.
#[derive(Debug, Clone)]
pub struct GuidanceGate {
    pub enabled: bool,
    machinery: Option<(Discriminator, Guider)>,
    pub r_demo: f64,
    pub r_pi: f64,
}

impl GuidanceGate {
    /// A gate that never fires; action selection reduces to the plain policy.
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            machinery: None,
            r_demo: 0.0,
            r_pi: 0.0,
        }
    }

    pub fn new(discriminator: Discriminator, guider: Guider, r_demo: f64) -> Self {
        Self {
            enabled: true,
            machinery: Some((discriminator, guider)),
            r_demo,
            r_pi: 0.0,
        }
    }

    /// Whether the gate would substitute an action in `state` right now.
    pub fn fires(&self, state: &[f64]) -> Result<bool> {
        if !self.enabled || self.r_demo <= self.r_pi {
            return Ok(false);
        }
        match &self.machinery {
            Some((disc, _)) => disc.discriminate(state),
            None => Ok(false),
        }
    }

    /// Algorithm-level action selection: the guider's action when the gate
    /// fires, the policy's reparameterized sample otherwise. Returns the
    /// action and whether it was guided. Policy noise and guider noise come
    /// from separate streams so disabling guidance leaves the policy stream
    /// untouched.
    pub fn select_action(
        &self,
        policy: &GaussianPolicy,
        state: &[f64],
        policy_rng: &mut Rng,
        guider_rng: &mut Rng,
    ) -> Result<(Vec<f64>, bool)> {
        if self.fires(state)? {
            let (_, guider) = self.machinery.as_ref().expect("fires implies machinery");
            Ok((guider.guide(state, guider_rng)?, true))
        } else {
            let (action, _) = policy.sample_action(state, policy_rng)?;
            Ok((action, false))
        }
    }
}

/// Builds the configured discriminator/guider pair from a demonstration set.
pub fn build_gate(
    demos: &DemoSet,
    cfg: &GuidanceConfig,
    spec: &EnvSpec,
    rng: &mut Rng,
) -> Result<GuidanceGate> {
    if demos.is_empty() {
        return Err(Error::Usage(
            "build_gate: demonstration set is empty".to_string(),
        ));
    }
    if demos.obs_dim != spec.obs_dim || demos.act_dim != spec.act_dim {
        return Err(Error::Config(format!(
            "demo set dimensions ({}, {}) do not match environment '{}' ({}, {})",
            demos.obs_dim, demos.act_dim, spec.name, spec.obs_dim, spec.act_dim
        )));
    }
    let r_demo = demos.r_demo.ok_or_else(|| {
        Error::Config("demo set has no recorded average return".to_string())
    })?;

    let discriminator = match cfg.discriminator {
        DiscriminatorKind::Functional => {
            Discriminator::Functional(FunctionalDiscriminator::from_demos(demos, cfg.t2)?)
        }
        DiscriminatorKind::Gmm => {
            let states: Vec<Vec<f64>> = demos.states().map(|s| s.to_vec()).collect();
            Discriminator::Gmm(fit_gmm(
                &states,
                cfg.gmm_components,
                cfg.gmm_max_iters,
                cfg.gmm_tol,
                rng,
            )?)
        }
    };

    let sigma: Vec<f64> = match cfg.guider_sigma {
        Some(s) => vec![s; spec.act_dim],
        None => spec
            .action_low
            .iter()
            .zip(&spec.action_high)
            .map(|(lo, hi)| 0.1 * 0.5 * (hi - lo))
            .collect(),
    };
    let guider = match cfg.guider {
        GuiderKind::Functional => Guider::Functional(FunctionalGuider::from_demos(
            demos,
            sigma,
            &spec.action_low,
            &spec.action_high,
        )?),
        GuiderKind::Bc => Guider::Bc(train_bc_guider(
            demos,
            &spec.action_low,
            &spec.action_high,
            cfg.bc_epochs,
            cfg.bc_lr,
            cfg.bc_batch_size,
            rng,
        )?),
    };

    Ok(GuidanceGate::new(discriminator, guider, r_demo))
}
