//! Scripted experts used to collect demonstration data.

use super::sparse_reacher::{GOAL_CENTER, GOAL_RADIUS};
use super::DeterministicPolicy;

/// Mountain-car demonstration rule: push with `-0.5` while the velocity is
/// strictly negative, `+0.5` otherwise.
pub fn scripted_expert_mountaincar(obs: &[f64]) -> Vec<f64> {
    let velocity = obs[1];
    if velocity < 0.0 {
        vec![-0.5]
    } else {
        vec![0.5]
    }
}

pub struct MountainCarExpert;

impl DeterministicPolicy for MountainCarExpert {
    fn act(&self, obs: &[f64]) -> Vec<f64> {
        scripted_expert_mountaincar(obs)
    }
}

/// Drives straight at the goal center at full speed, easing off inside the
/// goal zone so the agent settles there.
pub struct SparseReacherExpert;

impl DeterministicPolicy for SparseReacherExpert {
    fn act(&self, obs: &[f64]) -> Vec<f64> {
        let dx = GOAL_CENTER[0] - obs[0];
        let dy = GOAL_CENTER[1] - obs[1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist < 1e-9 {
            return vec![0.0, 0.0];
        }
        // Saturates far from the goal, proportional once inside the zone.
        let gain = if dist < GOAL_RADIUS { 8.0 } else { 1e6 };
        vec![
            (gain * dx / dist.max(1e-9)).clamp(-1.0, 1.0),
            (gain * dy / dist.max(1e-9)).clamp(-1.0, 1.0),
        ]
    }
}

/// Energy-shaping swing-up with a PD hold near the top; a serviceable
/// demonstration source for the dense-reward sanity task.
pub struct PendulumExpert;

impl DeterministicPolicy for PendulumExpert {
    fn act(&self, obs: &[f64]) -> Vec<f64> {
        let (cos_th, sin_th, theta_dot) = (obs[0], obs[1], obs[2]);
        let theta = sin_th.atan2(cos_th);
        if cos_th > 0.95 && theta_dot.abs() < 2.0 {
            // Close to upright: PD stabilization.
            return vec![(-8.0 * theta - 2.0 * theta_dot).clamp(-2.0, 2.0)];
        }
        // Pump energy toward the upright total energy (m g l).
        let energy = 0.5 * theta_dot * theta_dot / 3.0 - 10.0 * cos_th;
        let target = 10.0;
        let u = 4.0 * theta_dot * (target - energy);
        let u = if u == 0.0 { 1.0 } else { u };
        vec![u.clamp(-2.0, 2.0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{evaluate_policy, make_env};
    use crate::numerics::Rng;

    #[test]
    fn mountaincar_rule_sign_and_boundary() {
        assert_eq!(scripted_expert_mountaincar(&[-0.5, -0.01]), vec![-0.5]);
        assert_eq!(scripted_expert_mountaincar(&[-0.5, 0.01]), vec![0.5]);
        // "less than 0" is strict, so zero velocity pushes forward.
        assert_eq!(scripted_expert_mountaincar(&[-0.5, 0.0]), vec![0.5]);
    }

    #[test]
    fn reacher_expert_reaches_and_holds_the_goal_zone() {
        let mut env = make_env("sparse_reacher").unwrap();
        let mut rng = Rng::new(0);
        let ret = evaluate_policy(env.as_mut(), &SparseReacherExpert, 1, &mut rng).unwrap();
        assert!(ret > 150.0, "reacher expert return {ret}");
    }

    #[test]
    fn pendulum_expert_beats_hanging_still() {
        let mut env = make_env("pendulum").unwrap();
        let mut rng = Rng::new(8);
        let expert = evaluate_policy(env.as_mut(), &PendulumExpert, 5, &mut rng).unwrap();
        let mut env2 = make_env("pendulum").unwrap();
        let mut rng2 = Rng::new(8);
        let idle = |_: &[f64]| vec![0.0];
        let passive = evaluate_policy(env2.as_mut(), &idle, 5, &mut rng2).unwrap();
        assert!(
            expert > passive + 100.0,
            "expert {expert} vs passive {passive}"
        );
    }
}
