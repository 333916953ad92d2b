//! Deterministic, dependency-free continuous-control environments.
//!
//! Three desk-scale tasks are provided:
//!
//! - [`MountainCar`]: the classic sparse-reward car-on-a-hill, with canonical
//!   dynamics and the `-0.1·a²` action cost / `+100` goal bonus.
//! - [`Pendulum`]: dense-reward swing-up, a sanity task where plain SAC is
//!   already strong.
//! - [`SparseReacher`]: a 2-D point mass with a far goal zone paying reward 1
//!   per step and a weak distractor zone near the start that traps greedy
//!   policies in a local optimum.

mod episode;
mod expert;
mod mountain_car;
mod pendulum;
mod sparse_reacher;

pub use episode::{Episode, Transition};
pub use expert::{
    scripted_expert_mountaincar, MountainCarExpert, PendulumExpert, SparseReacherExpert,
};
pub use mountain_car::MountainCar;
pub use pendulum::Pendulum;
pub use sparse_reacher::SparseReacher;

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Static description of an environment's observation/action spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    /// Typical magnitude per observation dimension. Observations are emitted
    /// raw; learners divide network inputs by these so that dimensions with
    /// very different ranges (mountain-car velocity is ±0.07) stay
    /// well-conditioned.
    pub obs_scale: Vec<f64>,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.action_low.len() != self.act_dim || self.action_high.len() != self.act_dim {
            return Err(Error::InvalidArgument(format!(
                "{}: action bounds must have act_dim entries",
                self.name
            )));
        }
        if self
            .action_low
            .iter()
            .zip(&self.action_high)
            .any(|(lo, hi)| lo >= hi)
        {
            return Err(Error::InvalidArgument(format!(
                "{}: action_low must be elementwise below action_high",
                self.name
            )));
        }
        if self.obs_scale.len() != self.obs_dim || self.obs_scale.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: obs_scale must have obs_dim positive entries",
                self.name
            )));
        }
        Ok(())
    }

    /// Clips an action into the box, elementwise.
    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&a, (&lo, &hi))| a.clamp(lo, hi))
            .collect()
    }
}

/// Result of one environment step. `transition.done` is true whenever the
/// episode ended, for either reason; `terminated` singles out true goal
/// termination so learners can bootstrap through step-limit truncation.
#[derive(Debug, Clone)]
pub struct Step {
    pub transition: Transition,
    pub terminated: bool,
    pub truncated: bool,
}

/// Continuous-control MDP interface. Dynamics are deterministic given the
/// reset draw; actions are clipped to the spec's bounds before being applied.
pub trait Env {
    fn spec(&self) -> &EnvSpec;

    /// Draws an initial state and zeroes the step counter.
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;

    /// Advances the dynamics by one step. Stepping a finished episode is a
    /// usage error.
    fn step(&mut self, action: &[f64]) -> Result<Step>;
}

/// Constructs an environment by name.
pub fn make_env(name: &str) -> Result<Box<dyn Env>> {
    match name {
        "mountain_car" => Ok(Box::new(MountainCar::new())),
        "pendulum" => Ok(Box::new(Pendulum::new())),
        "sparse_reacher" => Ok(Box::new(SparseReacher::new())),
        other => Err(Error::Config(format!(
            "unknown environment '{other}' (expected mountain_car, pendulum, or sparse_reacher)"
        ))),
    }
}

pub const ENV_NAMES: &[&str] = &["mountain_car", "pendulum", "sparse_reacher"];

/// A deterministic state-to-action mapping; what evaluation runs and what
/// scripted experts implement.
pub trait DeterministicPolicy {
    fn act(&self, obs: &[f64]) -> Vec<f64>;
}

impl<F> DeterministicPolicy for F
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn act(&self, obs: &[f64]) -> Vec<f64> {
        self(obs)
    }
}

/// Rolls one full episode under a deterministic policy.
pub fn rollout(env: &mut dyn Env, policy: &dyn DeterministicPolicy, rng: &mut Rng) -> Result<Episode> {
    let mut obs = env.reset(rng);
    let mut episode = Episode::new();
    loop {
        let action = policy.act(&obs);
        let step = env.step(&action)?;
        obs = step.transition.s_next.clone();
        let over = step.transition.done;
        episode.push(step.transition);
        if over {
            return Ok(episode);
        }
    }
}

/// Mean undiscounted return of `policy` over `episodes` rollouts.
pub fn evaluate_policy(
    env: &mut dyn Env,
    policy: &dyn DeterministicPolicy,
    episodes: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "evaluate_policy: episodes must be >= 1".to_string(),
        ));
    }
    let mut total = 0.0;
    for _ in 0..episodes {
        total += rollout(env, policy, rng)?.total_return;
    }
    Ok(total / episodes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_env_rejects_unknown_names() {
        assert!(make_env("walker2d").is_err());
    }

    #[test]
    fn all_envs_emit_spec_shaped_transitions() {
        let mut rng = Rng::new(17);
        for name in ENV_NAMES {
            let mut env = make_env(name).unwrap();
            let spec = env.spec().clone();
            spec.validate().unwrap();
            let obs = env.reset(&mut rng);
            assert_eq!(obs.len(), spec.obs_dim, "{name} reset obs");
            for _ in 0..20 {
                let action: Vec<f64> = (0..spec.act_dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
                let step = env.step(&action).unwrap();
                let t = &step.transition;
                assert_eq!(t.s.len(), spec.obs_dim);
                assert_eq!(t.s_next.len(), spec.obs_dim);
                assert_eq!(t.a.len(), spec.act_dim);
                for (v, (lo, hi)) in t.a.iter().zip(spec.action_low.iter().zip(&spec.action_high)) {
                    assert!(*v >= *lo && *v <= *hi, "{name} action out of bounds");
                }
                if t.done {
                    break;
                }
            }
        }
    }

    #[test]
    fn stepping_a_finished_episode_is_an_error() {
        let mut rng = Rng::new(0);
        let mut env = make_env("pendulum").unwrap();
        env.reset(&mut rng);
        loop {
            let step = env.step(&[0.0]).unwrap();
            if step.transition.done {
                break;
            }
        }
        assert!(env.step(&[0.0]).is_err());
    }

    #[test]
    fn episodes_never_exceed_step_limit() {
        let mut rng = Rng::new(3);
        for name in ENV_NAMES {
            let mut env = make_env(name).unwrap();
            let limit = env.spec().max_episode_steps;
            let zero = vec![0.0; env.spec().act_dim];
            env.reset(&mut rng);
            let mut steps = 0;
            loop {
                let step = env.step(&zero).unwrap();
                steps += 1;
                if step.transition.done {
                    break;
                }
            }
            assert!(steps <= limit, "{name}: {steps} > {limit}");
        }
    }

    #[test]
    fn same_seed_same_actions_identical_episode() {
        for name in ENV_NAMES {
            let mut action_rng = Rng::new(41);
            let actions: Vec<Vec<f64>> = (0..50)
                .map(|_| vec![action_rng.uniform_in(-1.0, 1.0)])
                .collect();
            let run = |seed: u64| -> Vec<(Vec<f64>, f64, bool)> {
                let mut env = make_env(name).unwrap();
                let mut rng = Rng::new(seed);
                env.reset(&mut rng);
                let mut out = Vec::new();
                for a in &actions {
                    let a_full: Vec<f64> = std::iter::repeat(a[0]).take(env.spec().act_dim).collect();
                    let step = env.step(&a_full).unwrap();
                    out.push((
                        step.transition.s_next.clone(),
                        step.transition.r,
                        step.transition.done,
                    ));
                    if step.transition.done {
                        break;
                    }
                }
                out
            };
            let a = run(7);
            let b = run(7);
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.1.to_bits(), y.1.to_bits());
                assert_eq!(x.2, y.2);
                for (u, v) in x.0.iter().zip(&y.0) {
                    assert_eq!(u.to_bits(), v.to_bits(), "{name} diverged");
                }
            }
        }
    }

    #[test]
    fn evaluate_zero_policy_on_mountain_car_returns_zero() {
        let mut env = make_env("mountain_car").unwrap();
        let mut rng = Rng::new(5);
        let zero = |_obs: &[f64]| vec![0.0];
        let ret = evaluate_policy(env.as_mut(), &zero, 2, &mut rng).unwrap();
        assert_eq!(ret, 0.0);
    }

    #[test]
    fn evaluate_policy_is_reproducible() {
        let mut env = make_env("mountain_car").unwrap();
        let policy = MountainCarExpert;
        let mut rng_a = Rng::new(11);
        let a = evaluate_policy(env.as_mut(), &policy, 3, &mut rng_a).unwrap();
        let mut env2 = make_env("mountain_car").unwrap();
        let mut rng_b = Rng::new(11);
        let b = evaluate_policy(env2.as_mut(), &policy, 3, &mut rng_b).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn mountain_car_expert_scores_above_80() {
        let mut env = make_env("mountain_car").unwrap();
        let mut rng = Rng::new(23);
        let ret = evaluate_policy(env.as_mut(), &MountainCarExpert, 5, &mut rng).unwrap();
        assert!(ret > 80.0, "expert return {ret}");
    }
}
