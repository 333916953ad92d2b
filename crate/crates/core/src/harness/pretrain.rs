//! Behavior-cloning pretraining of the policy mean head, the baseline family
//! the guided learner is compared against.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::{Optimizer, Rng};
use crate::replay::DemoSet;
use crate::sac::GaussianPolicy;

/// Regresses `rescale(tanh(μ(s)))` onto the demo actions for `epochs` passes
/// of shuffled minibatches. Returns the final epoch's mean loss; zero epochs
/// leave the policy untouched.
pub fn bc_pretrain(
    policy: &mut GaussianPolicy,
    demos: &DemoSet,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if demos.is_empty() {
        return Err(Error::InvalidArgument(
            "bc_pretrain: empty demo set".to_string(),
        ));
    }
    if demos.obs_dim != policy.obs_dim() || demos.act_dim != policy.act_dim() {
        return Err(Error::Config(
            "bc_pretrain: demo dimensions do not match the policy".to_string(),
        ));
    }
    if epochs == 0 {
        return Ok(0.0);
    }
    let n = demos.len();
    let act_dim = policy.act_dim();
    let center = policy.center().to_vec();
    let half_range = policy.half_range().to_vec();
    let mut opt = Optimizer::adam(policy.trunk(), lr);
    let mut order: Vec<usize> = (0..n).collect();
    let mut last_epoch_loss = 0.0;

    for _ in 0..epochs {
        for i in (1..n).rev() {
            order.swap(i, rng.index(i + 1));
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(batch_size.min(n)) {
            let m = chunk.len();
            let mut x = Array2::zeros((m, demos.obs_dim));
            let mut y = Array2::zeros((m, act_dim));
            for (row, &idx) in chunk.iter().enumerate() {
                let (s, a) = &demos.pairs[idx];
                for j in 0..demos.obs_dim {
                    x[[row, j]] = s[j];
                }
                for j in 0..act_dim {
                    y[[row, j]] = a[j];
                }
            }
            let x = policy.normalize_states(&x);
            let (trace, heads) = policy.trunk().forward_batch_traced(&x)?;
            // Only the μ head carries gradient; the squash chain rule is
            // d(pred)/dμ = R (1 - tanh²μ).
            let mut head_grad = Array2::zeros((m, 2 * act_dim));
            let mut loss = 0.0;
            for i in 0..m {
                for j in 0..act_dim {
                    let t = heads[[i, j]].tanh();
                    let pred = center[j] + half_range[j] * t;
                    let residual = pred - y[[i, j]];
                    loss += residual * residual;
                    head_grad[[i, j]] = 2.0 * residual * half_range[j] * (1.0 - t * t)
                        / (m * act_dim) as f64;
                }
            }
            loss /= (m * act_dim) as f64;
            if !loss.is_finite() {
                return Err(Error::NonFinite("bc_pretrain loss".to_string()));
            }
            let (grads, _) = policy.trunk().backward_batch(&trace, &head_grad)?;
            opt.step(policy.trunk_mut(), &grads)?;
            epoch_loss += loss * m as f64;
            seen += m;
        }
        last_epoch_loss = epoch_loss / seen as f64;
    }
    Ok(last_epoch_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{evaluate_policy, make_env, MountainCarExpert};
    use crate::replay::collect_demos;

    #[test]
    fn zero_epochs_is_identity() {
        let mut rng = Rng::new(1);
        let mut policy = GaussianPolicy::new(2, 1, &[16], &[-1.0], &[1.0], &mut rng).unwrap();
        let before = policy.trunk().clone();
        let demos = DemoSet {
            env_name: "mountain_car".into(),
            obs_dim: 2,
            act_dim: 1,
            pairs: vec![(vec![0.0, 0.0], vec![0.5])],
            episode_ends: vec![1],
            r_demo: Some(1.0),
        };
        bc_pretrain(&mut policy, &demos, 0, 1e-3, 64, &mut rng).unwrap();
        assert_eq!(policy.trunk(), &before);
    }

    #[test]
    fn pretrained_policy_solves_mountain_car_before_any_rl() {
        let mut env = make_env("mountain_car").unwrap();
        let mut rng = Rng::new(13);
        let demos = collect_demos(env.as_mut(), &MountainCarExpert, 1000, &mut rng).unwrap();
        let mut policy =
            GaussianPolicy::new(2, 1, &[64, 64], &[-1.0], &[1.0], &mut rng).unwrap();
        bc_pretrain(&mut policy, &demos, 200, 1e-3, 64, &mut rng).unwrap();
        let mut eval_rng = Rng::new(99);
        let ret = evaluate_policy(env.as_mut(), &policy, 3, &mut eval_rng).unwrap();
        assert!(ret > 0.0, "pretrained deterministic return {ret}");
    }

    #[test]
    fn pretraining_changes_the_parameters() {
        let mut rng = Rng::new(17);
        let mut policy = GaussianPolicy::new(2, 1, &[16], &[-1.0], &[1.0], &mut rng).unwrap();
        let before = policy.trunk().clone();
        let demos = DemoSet {
            env_name: "mountain_car".into(),
            obs_dim: 2,
            act_dim: 1,
            pairs: (0..32).map(|i| (vec![i as f64 * 0.01, 0.0], vec![0.5])).collect(),
            episode_ends: vec![32],
            r_demo: Some(1.0),
        };
        bc_pretrain(&mut policy, &demos, 5, 1e-3, 16, &mut rng).unwrap();
        assert_ne!(policy.trunk(), &before);
    }
}
