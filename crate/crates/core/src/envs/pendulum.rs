//! Torque-limited pendulum swing-up with dense rewards.
//!
//! Observation is `(cos θ, sin θ, θ̇)`; per-step reward is
//! `-(θ_norm² + 0.1·θ̇² + 0.001·u²)`, so 0 is the unreachable upper bound and
//! a hanging pendulum scores around -1000 per 200-step episode.

use super::episode::Transition;
use super::{Env, EnvSpec, Step};
use crate::error::{Error, Result};
use crate::numerics::Rng;

const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const DT: f64 = 0.05;
const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    needs_reset: bool,
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "pendulum",
                obs_dim: 3,
                act_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                obs_scale: vec![1.0, 1.0, MAX_SPEED],
                max_episode_steps: 200,
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
            needs_reset: true,
        }
    }

    fn obs(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

/// Wraps an angle into `[-π, π]`.
fn angle_normalize(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = (x + std::f64::consts::PI) % two_pi;
    if y < 0.0 {
        y += two_pi;
    }
    y - std::f64::consts::PI
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.theta = rng.uniform_in(-std::f64::consts::PI, std::f64::consts::PI);
        self.theta_dot = rng.uniform_in(-1.0, 1.0);
        self.steps = 0;
        self.needs_reset = false;
        self.obs()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        if self.needs_reset {
            return Err(Error::Usage(
                "pendulum: episode finished, call reset first".to_string(),
            ));
        }
        if action.len() != 1 {
            return Err(Error::DimensionMismatch {
                context: "pendulum action",
                expected: 1,
                got: action.len(),
            });
        }
        let s = self.obs();
        let u = action[0].clamp(-MAX_TORQUE, MAX_TORQUE);

        let th = angle_normalize(self.theta);
        let cost = th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u;

        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin()
            + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta_dot = (self.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
        self.steps += 1;

        let truncated = self.steps >= self.spec.max_episode_steps;
        self.needs_reset = truncated;

        Ok(Step {
            transition: Transition {
                s,
                a: vec![u],
                r: -cost,
                s_next: self.obs(),
                done: truncated,
            },
            terminated: false,
            truncated,
        })
    }
}
