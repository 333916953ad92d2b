//! Squashed-Gaussian policy with reparameterized sampling.
//!
//! The trunk maps a state to `(μ, log σ)` heads; a sample is
//! `u = μ + σ ⊙ ξ` pushed through `tanh` and an affine rescale into the
//! action box. Log-densities carry the tanh Jacobian correction and the
//! rescale log-volume so `log π` is consistent across the losses.

use ndarray::{Array1, Array2};

use crate::envs::DeterministicPolicy;
use crate::error::{Error, Result};
use crate::numerics::{BatchTrace, Mlp, Rng};

pub const LOG_SIGMA_MIN: f64 = -20.0;
pub const LOG_SIGMA_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Numerically stable `softplus(x) = ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Stable `log(1 - tanh(u)^2) = 2 (ln 2 - u - softplus(-2u))`.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Stochastic policy over a bounded action box.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    trunk: Mlp,
    obs_dim: usize,
    act_dim: usize,
    /// Box center per action dimension.
    center: Vec<f64>,
    /// Box half-width per action dimension.
    half_range: Vec<f64>,
    /// Per-dimension input scale; trunk inputs are `state / obs_scale`.
    obs_scale: Vec<f64>,
}

/// Everything a batched reparameterized sample exposes to the update rules.
pub struct PolicySample {
    pub trace: BatchTrace,
    /// Raw (pre-clamp) log-σ head output, needed to gate gradients at the clamp.
    pub log_sigma_raw: Array2<f64>,
    pub sigma: Array2<f64>,
    /// Pre-squash sample `u = μ + σ ξ`.
    pub u: Array2<f64>,
    /// `tanh(u)`.
    pub t: Array2<f64>,
    /// Environment-scale action.
    pub action: Array2<f64>,
    /// Per-sample `log π(a|s)`.
    pub log_prob: Array1<f64>,
    /// The noise that generated the sample.
    pub noise: Array2<f64>,
}

impl GaussianPolicy {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        action_low: &[f64],
        action_high: &[f64],
        rng: &mut Rng,
    ) -> Result<Self> {
        if action_low.len() != act_dim || action_high.len() != act_dim {
            return Err(Error::InvalidArgument(
                "policy action bounds must have act_dim entries".to_string(),
            ));
        }
        if action_low.iter().zip(action_high).any(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidArgument(
                "policy action bounds must satisfy low < high".to_string(),
            ));
        }
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * act_dim);
        Ok(Self {
            trunk: Mlp::new(&sizes, rng)?,
            obs_dim,
            act_dim,
            center: action_low
                .iter()
                .zip(action_high)
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
            half_range: action_low
                .iter()
                .zip(action_high)
                .map(|(lo, hi)| 0.5 * (hi - lo))
                .collect(),
            obs_scale: vec![1.0; obs_dim],
        })
    }

    /// Sets the per-dimension input scale (see [`crate::envs::EnvSpec::obs_scale`]).
    pub fn set_obs_scale(&mut self, obs_scale: Vec<f64>) -> Result<()> {
        if obs_scale.len() != self.obs_dim || obs_scale.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidArgument(
                "obs_scale must have obs_dim positive entries".to_string(),
            ));
        }
        self.obs_scale = obs_scale;
        Ok(())
    }

    pub fn obs_scale(&self) -> &[f64] {
        &self.obs_scale
    }

    /// Applies the input scaling to a batch of raw states.
    pub fn normalize_states(&self, states: &Array2<f64>) -> Array2<f64> {
        let mut out = states.clone();
        for mut row in out.rows_mut() {
            for (v, s) in row.iter_mut().zip(&self.obs_scale) {
                *v /= s;
            }
        }
        out
    }

    pub fn trunk(&self) -> &Mlp {
        &self.trunk
    }

    pub fn trunk_mut(&mut self) -> &mut Mlp {
        &mut self.trunk
    }

    /// Replaces the trunk; shapes must match (used by checkpoint loading and
    /// behavior-cloning pretraining).
    pub fn set_trunk(&mut self, trunk: Mlp) -> Result<()> {
        if trunk.layer_sizes() != self.trunk.layer_sizes() {
            return Err(Error::Usage(
                "set_trunk: replacement network has a different shape".to_string(),
            ));
        }
        self.trunk = trunk;
        Ok(())
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn half_range(&self) -> &[f64] {
        &self.half_range
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// `(μ, clamped log σ)` heads for one state.
    pub fn heads(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if state.len() != self.obs_dim {
            return Err(Error::DimensionMismatch {
                context: "GaussianPolicy::heads",
                expected: self.obs_dim,
                got: state.len(),
            });
        }
        let scaled: Vec<f64> = state.iter().zip(&self.obs_scale).map(|(v, s)| v / s).collect();
        let out = self.trunk.forward(&scaled)?;
        let mu = out[..self.act_dim].to_vec();
        let log_sigma = out[self.act_dim..]
            .iter()
            .map(|v| v.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX))
            .collect();
        Ok((mu, log_sigma))
    }

    /// Draws one action and its log-density.
    pub fn sample_action(&self, state: &[f64], rng: &mut Rng) -> Result<(Vec<f64>, f64)> {
        let noise: Vec<f64> = rng.standard_normal_vec(self.act_dim);
        self.sample_action_with_noise(state, &noise)
    }

    /// Deterministic variant of [`GaussianPolicy::sample_action`] for fixed
    /// noise (common-random-number tests) and for the zero-noise case.
    pub fn sample_action_with_noise(&self, state: &[f64], noise: &[f64]) -> Result<(Vec<f64>, f64)> {
        if noise.len() != self.act_dim {
            return Err(Error::DimensionMismatch {
                context: "sample_action noise",
                expected: self.act_dim,
                got: noise.len(),
            });
        }
        let (mu, log_sigma) = self.heads(state)?;
        let mut action = vec![0.0; self.act_dim];
        let mut log_prob = 0.0;
        for j in 0..self.act_dim {
            let sigma = log_sigma[j].exp();
            let u = mu[j] + sigma * noise[j];
            let t = u.tanh();
            action[j] = self.center[j] + self.half_range[j] * t;
            log_prob += -HALF_LN_2PI
                - log_sigma[j]
                - 0.5 * noise[j] * noise[j]
                - log_one_minus_tanh_sq(u)
                - self.half_range[j].ln();
        }
        Ok((action, log_prob))
    }

    /// The deterministic action: `rescale(tanh(μ))`.
    pub fn mean_action(&self, state: &[f64]) -> Result<Vec<f64>> {
        let (mu, _) = self.heads(state)?;
        Ok(mu
            .iter()
            .enumerate()
            .map(|(j, m)| self.center[j] + self.half_range[j] * m.tanh())
            .collect())
    }

    /// Log-density of an arbitrary in-bounds action under the current policy.
    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.act_dim {
            return Err(Error::DimensionMismatch {
                context: "log_prob action",
                expected: self.act_dim,
                got: action.len(),
            });
        }
        let (mu, log_sigma) = self.heads(state)?;
        let mut lp = 0.0;
        for j in 0..self.act_dim {
            let t = ((action[j] - self.center[j]) / self.half_range[j]).clamp(-0.999_999, 0.999_999);
            let u = t.atanh();
            let sigma = log_sigma[j].exp();
            let z = (u - mu[j]) / sigma;
            lp += -HALF_LN_2PI - log_sigma[j] - 0.5 * z * z
                - log_one_minus_tanh_sq(u)
                - self.half_range[j].ln();
        }
        Ok(lp)
    }

    /// Batched reparameterized sample through fixed noise; records the trunk
    /// trace so update rules can backpropagate.
    pub fn sample_batch(&self, states: &Array2<f64>, noise: &Array2<f64>) -> Result<PolicySample> {
        let n = states.nrows();
        if noise.dim() != (n, self.act_dim) {
            return Err(Error::DimensionMismatch {
                context: "sample_batch noise",
                expected: n * self.act_dim,
                got: noise.len(),
            });
        }
        let scaled = self.normalize_states(states);
        let (trace, heads) = self.trunk.forward_batch_traced(&scaled)?;
        let mut log_sigma_raw = Array2::zeros((n, self.act_dim));
        let mut sigma = Array2::zeros((n, self.act_dim));
        let mut u = Array2::zeros((n, self.act_dim));
        let mut t = Array2::zeros((n, self.act_dim));
        let mut action = Array2::zeros((n, self.act_dim));
        let mut log_prob = Array1::zeros(n);
        for i in 0..n {
            let mut lp = 0.0;
            for j in 0..self.act_dim {
                let raw = heads[[i, self.act_dim + j]];
                let ls = raw.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
                let sg = ls.exp();
                let uu = heads[[i, j]] + sg * noise[[i, j]];
                let tt = uu.tanh();
                log_sigma_raw[[i, j]] = raw;
                sigma[[i, j]] = sg;
                u[[i, j]] = uu;
                t[[i, j]] = tt;
                action[[i, j]] = self.center[j] + self.half_range[j] * tt;
                lp += -HALF_LN_2PI - ls - 0.5 * noise[[i, j]] * noise[[i, j]]
                    - log_one_minus_tanh_sq(uu)
                    - self.half_range[j].ln();
            }
            log_prob[i] = lp;
        }
        Ok(PolicySample {
            trace,
            log_sigma_raw,
            sigma,
            u,
            t,
            action,
            log_prob,
            noise: noise.clone(),
        })
    }
}

impl DeterministicPolicy for GaussianPolicy {
    fn act(&self, obs: &[f64]) -> Vec<f64> {
        self.mean_action(obs).expect("observation shape matches policy")
    }
}
