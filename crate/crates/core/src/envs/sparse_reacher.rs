//! Sparse point-mass reacher with a local-optimum trap.
//!
//! A point agent starts at the origin of a `[-1, 1]²` arena; actions are
//! velocity commands scaled by `STEP_SCALE`. The step reward is 1 while the
//! agent sits inside the far goal zone and 0 elsewhere, except for a weak
//! distractor zone near the start paying `DISTRACTOR_REWARD` per step. Greedy
//! learners find the distractor almost immediately and park there; the goal
//! zone pays twenty times more per step but is far outside the reach of
//! undirected exploration.

use super::episode::Transition;
use super::{Env, EnvSpec, Step};
use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const GOAL_CENTER: [f64; 2] = [0.8, 0.8];
pub const GOAL_RADIUS: f64 = 0.1;
pub const DISTRACTOR_CENTER: [f64; 2] = [0.12, 0.12];
pub const DISTRACTOR_RADIUS: f64 = 0.1;
pub const DISTRACTOR_REWARD: f64 = 0.05;
pub const STEP_SCALE: f64 = 0.04;

#[derive(Debug, Clone)]
pub struct SparseReacher {
    spec: EnvSpec,
    pos: [f64; 2],
    steps: usize,
    needs_reset: bool,
}

impl SparseReacher {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "sparse_reacher",
                obs_dim: 2,
                act_dim: 2,
                action_low: vec![-1.0, -1.0],
                action_high: vec![1.0, 1.0],
                obs_scale: vec![1.0, 1.0],
                max_episode_steps: 200,
            },
            pos: [0.0, 0.0],
            steps: 0,
            needs_reset: true,
        }
    }

    fn in_zone(pos: &[f64; 2], center: &[f64; 2], radius: f64) -> bool {
        let dx = pos[0] - center[0];
        let dy = pos[1] - center[1];
        (dx * dx + dy * dy).sqrt() < radius
    }
}

impl Default for SparseReacher {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for SparseReacher {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut Rng) -> Vec<f64> {
        self.pos = [0.0, 0.0];
        self.steps = 0;
        self.needs_reset = false;
        self.pos.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        if self.needs_reset {
            return Err(Error::Usage(
                "sparse_reacher: episode finished, call reset first".to_string(),
            ));
        }
        if action.len() != 2 {
            return Err(Error::DimensionMismatch {
                context: "sparse_reacher action",
                expected: 2,
                got: action.len(),
            });
        }
        let s = self.pos.to_vec();
        let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];
        self.pos[0] = (self.pos[0] + STEP_SCALE * a[0]).clamp(-1.0, 1.0);
        self.pos[1] = (self.pos[1] + STEP_SCALE * a[1]).clamp(-1.0, 1.0);
        self.steps += 1;

        let reward = if Self::in_zone(&self.pos, &GOAL_CENTER, GOAL_RADIUS) {
            1.0
        } else if Self::in_zone(&self.pos, &DISTRACTOR_CENTER, DISTRACTOR_RADIUS) {
            DISTRACTOR_REWARD
        } else {
            0.0
        };

        let truncated = self.steps >= self.spec.max_episode_steps;
        self.needs_reset = truncated;

        Ok(Step {
            transition: Transition {
                s,
                a: a.to_vec(),
                r: reward,
                s_next: self.pos.to_vec(),
                done: truncated,
            },
            terminated: false,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_origin_with_fixed_goal() {
        let mut env = SparseReacher::new();
        let obs = env.reset(&mut Rng::new(0));
        assert_eq!(obs, vec![0.0, 0.0]);
        assert_eq!(GOAL_CENTER, [0.8, 0.8]);
    }

    #[test]
    fn reward_is_one_inside_goal_zone_zero_far_away() {
        let mut env = SparseReacher::new();
        env.reset(&mut Rng::new(0));
        env.pos = [0.79, 0.79];
        let step = env.step(&[0.0, 0.0]).unwrap();
        assert_eq!(step.transition.r, 1.0);

        let mut env2 = SparseReacher::new();
        env2.reset(&mut Rng::new(0));
        env2.pos = [-0.5, -0.5];
        let step2 = env2.step(&[0.0, 0.0]).unwrap();
        assert_eq!(step2.transition.r, 0.0);
    }

    #[test]
    fn distractor_pays_low_reward() {
        let mut env = SparseReacher::new();
        env.reset(&mut Rng::new(0));
        env.pos = DISTRACTOR_CENTER;
        let step = env.step(&[0.0, 0.0]).unwrap();
        assert_eq!(step.transition.r, DISTRACTOR_REWARD);
    }

    #[test]
    fn arena_bounds_clip_position() {
        let mut env = SparseReacher::new();
        env.reset(&mut Rng::new(0));
        env.pos = [1.0, 1.0];
        let step = env.step(&[1.0, 1.0]).unwrap();
        assert_eq!(step.transition.s_next, vec![1.0, 1.0]);
    }

    #[test]
    fn episode_runs_exactly_the_step_limit() {
        let mut env = SparseReacher::new();
        env.reset(&mut Rng::new(0));
        for i in 0..200 {
            let step = env.step(&[0.0, 0.0]).unwrap();
            assert_eq!(step.transition.done, i == 199);
        }
    }
}
