//! Continuous mountain car with the canonical public dynamics.
//!
//! State is `(position, velocity)`. Each step costs `0.1·a²`; reaching
//! `position >= 0.45` pays `+100` and ends the episode. An agent that never
//! moves therefore accrues a return of exactly 0, which is the local optimum
//! plain SAC settles into.

use super::episode::Transition;
use super::{Env, EnvSpec, Step};
use crate::error::{Error, Result};
use crate::numerics::Rng;

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.45;
const POWER: f64 = 0.0015;
const GRAVITY: f64 = 0.0025;

#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    position: f64,
    velocity: f64,
    steps: usize,
    needs_reset: bool,
}

impl MountainCar {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "mountain_car",
                obs_dim: 2,
                act_dim: 1,
                action_low: vec![-1.0],
                action_high: vec![1.0],
                obs_scale: vec![1.0, 0.07],
                max_episode_steps: 999,
            },
            position: -0.5,
            velocity: 0.0,
            steps: 0,
            needs_reset: true,
        }
    }

    fn obs(&self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.position = rng.uniform_in(-0.6, -0.4);
        self.velocity = 0.0;
        self.steps = 0;
        self.needs_reset = false;
        self.obs()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        if self.needs_reset {
            return Err(Error::Usage(
                "mountain_car: episode finished, call reset first".to_string(),
            ));
        }
        if action.len() != 1 {
            return Err(Error::DimensionMismatch {
                context: "mountain_car action",
                expected: 1,
                got: action.len(),
            });
        }
        let s = self.obs();
        let force = action[0].clamp(-1.0, 1.0);

        self.velocity += force * POWER - GRAVITY * (3.0 * self.position).cos();
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position += self.velocity;
        self.position = self.position.clamp(MIN_POSITION, MAX_POSITION);
        if self.position <= MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }
        self.steps += 1;

        let terminated = self.position >= GOAL_POSITION;
        let truncated = !terminated && self.steps >= self.spec.max_episode_steps;
        let mut reward = -0.1 * force * force;
        if terminated {
            reward += 100.0;
        }
        self.needs_reset = terminated || truncated;

        Ok(Step {
            transition: Transition {
                s,
                a: vec![force],
                r: reward,
                s_next: self.obs(),
                done: terminated || truncated,
            },
            terminated,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::scripted_expert_mountaincar;

    #[test]
    fn reset_draws_position_in_band_with_zero_velocity() {
        let mut env = MountainCar::new();
        let mut rng = Rng::new(0);
        for _ in 0..50 {
            let obs = env.reset(&mut rng);
            assert!(obs[0] >= -0.6 && obs[0] <= -0.4, "position {}", obs[0]);
            assert_eq!(obs[1], 0.0);
        }
    }

    #[test]
    fn two_resets_same_seed_identical() {
        let mut a = MountainCar::new();
        let mut b = MountainCar::new();
        let oa = a.reset(&mut Rng::new(99));
        let ob = b.reset(&mut Rng::new(99));
        assert_eq!(oa, ob);
    }

    #[test]
    fn zero_action_at_valley_moves_only_by_gravity() {
        let mut env = MountainCar::new();
        env.reset(&mut Rng::new(1));
        env.position = -0.5;
        env.velocity = 0.0;
        let step = env.step(&[0.0]).unwrap();
        let expected_v = -GRAVITY * (3.0f64 * -0.5).cos();
        assert!((step.transition.s_next[1] - expected_v).abs() < 1e-15);
        assert!((step.transition.s_next[0] - (-0.5 + expected_v)).abs() < 1e-15);
        assert_eq!(step.transition.r, 0.0);
    }

    #[test]
    fn dynamics_match_hand_computation() {
        let mut env = MountainCar::new();
        env.reset(&mut Rng::new(1));
        env.position = -0.4;
        env.velocity = 0.01;
        let a = 0.5;
        let step = env.step(&[a]).unwrap();
        let v = (0.01 + a * POWER - GRAVITY * (3.0f64 * -0.4).cos()).clamp(-MAX_SPEED, MAX_SPEED);
        let x = (-0.4 + v).clamp(MIN_POSITION, MAX_POSITION);
        assert_eq!(step.transition.s_next, vec![x, v]);
        assert_eq!(step.transition.r, -0.1 * a * a);
    }

    #[test]
    fn actions_are_clipped_before_dynamics() {
        let mut env = MountainCar::new();
        env.reset(&mut Rng::new(1));
        env.position = -0.5;
        env.velocity = 0.0;
        let big = env.step(&[10.0]).unwrap();
        assert_eq!(big.transition.a, vec![1.0]);
        assert_eq!(big.transition.r, -0.1);
    }

    #[test]
    fn nongoal_rewards_are_nonpositive_and_goal_pays_bonus() {
        let mut env = MountainCar::new();
        let mut rng = Rng::new(42);
        let mut obs = env.reset(&mut rng);
        let mut action_cost = 0.0;
        let mut ret = 0.0;
        loop {
            let a = scripted_expert_mountaincar(&obs);
            let step = env.step(&a).unwrap();
            obs = step.transition.s_next.clone();
            ret += step.transition.r;
            action_cost += 0.1 * step.transition.a[0] * step.transition.a[0];
            if step.transition.done {
                assert!(step.terminated, "expert should reach the goal");
                break;
            }
            assert!(step.transition.r <= 0.0);
        }
        // Total return is exactly 100 minus accumulated action costs.
        assert!((ret - (100.0 - action_cost)).abs() < 1e-9);
        assert!(ret > 80.0, "expert return {ret}");
    }

    #[test]
    fn truncates_at_step_limit_without_termination() {
        let mut env = MountainCar::new();
        env.reset(&mut Rng::new(7));
        for i in 0..999 {
            let step = env.step(&[0.0]).unwrap();
            if i < 998 {
                assert!(!step.transition.done);
            } else {
                assert!(step.transition.done);
                assert!(step.truncated);
                assert!(!step.terminated);
            }
        }
        assert!(env.step(&[0.0]).is_err());
    }
}
