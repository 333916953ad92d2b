//! Behavior-cloned guider: a small network regressed on demonstration
//! state-action pairs.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics::{Mlp, Optimizer, Rng};
use crate::replay::DemoSet;

use super::functional::{StateScaler, SCALE_FLOOR};

/// Network guider trained by minibatch MSE regression; outputs are clipped to
/// the action bounds.
#[derive(Debug, Clone)]
pub struct BcGuider {
    net: Mlp,
    scaler: StateScaler,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

impl BcGuider {
    pub fn guide(&self, state: &[f64]) -> Result<Vec<f64>> {
        let normalized: Vec<f64> = state
            .iter()
            .zip(&self.scaler.scales)
            .map(|(x, s)| x / s)
            .collect();
        let out = self.net.forward(&normalized)?;
        Ok(out
            .iter()
            .enumerate()
            .map(|(j, &a)| a.clamp(self.action_low[j], self.action_high[j]))
            .collect())
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }
}

/// Trains a [`BcGuider`] on the demo pairs. Inputs are normalized by the
/// demo-state standard deviations; one epoch visits every pair once in a
/// shuffled minibatch order (full-batch when `batch_size >= len`).
pub fn train_bc_guider(
    demos: &DemoSet,
    action_low: &[f64],
    action_high: &[f64],
    epochs: usize,
    lr: f64,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<BcGuider> {
    if demos.is_empty() {
        return Err(Error::InvalidArgument(
            "train_bc_guider: empty demo set".to_string(),
        ));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument(
            "train_bc_guider: batch_size must be >= 1".to_string(),
        ));
    }
    let scaler = StateScaler {
        scales: demos.state_scales(SCALE_FLOOR),
    };
    let n = demos.len();
    let (obs_dim, act_dim) = (demos.obs_dim, demos.act_dim);

    let inputs: Vec<Vec<f64>> = demos
        .pairs
        .iter()
        .map(|(s, _)| s.iter().zip(&scaler.scales).map(|(x, sc)| x / sc).collect())
        .collect();

    let mut net = Mlp::new(&[obs_dim, 64, 64, act_dim], rng)?;
    let mut opt = Optimizer::adam(&net, lr);
    let mut loss_history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..epochs {
        // Fisher-Yates shuffle from the provided stream.
        for i in (1..n).rev() {
            order.swap(i, rng.index(i + 1));
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(batch_size.min(n)) {
            let m = chunk.len();
            let mut x = Array2::zeros((m, obs_dim));
            let mut y = Array2::zeros((m, act_dim));
            for (row, &idx) in chunk.iter().enumerate() {
                for j in 0..obs_dim {
                    x[[row, j]] = inputs[idx][j];
                }
                for j in 0..act_dim {
                    y[[row, j]] = demos.pairs[idx].1[j];
                }
            }
            let (trace, out) = net.forward_batch_traced(&x)?;
            let mut grad = Array2::zeros((m, act_dim));
            let mut loss = 0.0;
            for i in 0..m {
                for j in 0..act_dim {
                    let residual = out[[i, j]] - y[[i, j]];
                    loss += residual * residual;
                    grad[[i, j]] = 2.0 * residual / (m * act_dim) as f64;
                }
            }
            loss /= (m * act_dim) as f64;
            if !loss.is_finite() {
                return Err(Error::NonFinite("behavior cloning loss".to_string()));
            }
            let (grads, _) = net.backward_batch(&trace, &grad)?;
            opt.step(&mut net, &grads)?;
            epoch_loss += loss * m as f64;
            seen += m;
        }
        loss_history.push(epoch_loss / seen as f64);
    }

    Ok(BcGuider {
        net,
        scaler,
        action_low: action_low.to_vec(),
        action_high: action_high.to_vec(),
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_env, scripted_expert_mountaincar, MountainCarExpert};
    use crate::replay::collect_demos;

    #[test]
    fn memorizes_a_single_repeated_pair() {
        let demos = DemoSet {
            env_name: "x".into(),
            obs_dim: 2,
            act_dim: 1,
            pairs: vec![(vec![0.4, -0.3], vec![0.7]); 32],
            episode_ends: vec![32],
            r_demo: Some(1.0),
        };
        let mut rng = Rng::new(1);
        let guider =
            train_bc_guider(&demos, &[-1.0], &[1.0], 300, 1e-2, 32, &mut rng).unwrap();
        let out = guider.guide(&[0.4, -0.3]).unwrap();
        assert!((out[0] - 0.7).abs() < 1e-2, "got {}", out[0]);
    }

    #[test]
    fn learns_the_mountain_car_sign_rule() {
        let mut env = make_env("mountain_car").unwrap();
        let mut rng = Rng::new(3);
        let demos = collect_demos(env.as_mut(), &MountainCarExpert, 1000, &mut rng).unwrap();

        // Hold out every 5th pair.
        let mut train_pairs = Vec::new();
        let mut held_out = Vec::new();
        for (i, p) in demos.pairs.iter().enumerate() {
            if i % 5 == 0 {
                held_out.push(p.clone());
            } else {
                train_pairs.push(p.clone());
            }
        }
        let ends = vec![train_pairs.len()];
        let train_set = DemoSet {
            env_name: demos.env_name.clone(),
            obs_dim: 2,
            act_dim: 1,
            pairs: train_pairs,
            episode_ends: ends,
            r_demo: demos.r_demo,
        };
        let guider =
            train_bc_guider(&train_set, &[-1.0], &[1.0], 200, 1e-3, 64, &mut rng).unwrap();

        let mut correct = 0usize;
        for (s, _) in &held_out {
            let predicted = guider.guide(s).unwrap()[0];
            let expert = scripted_expert_mountaincar(s)[0];
            if predicted.signum() == expert.signum() {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / held_out.len() as f64;
        assert!(accuracy >= 0.95, "sign accuracy {accuracy}");
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        let mut rng = Rng::new(7);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..64)
            .map(|_| {
                let s = vec![rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
                let a = vec![(s[0] + s[1]).tanh() * 0.5];
                (s, a)
            })
            .collect();
        let demos = DemoSet {
            env_name: "x".into(),
            obs_dim: 2,
            act_dim: 1,
            pairs,
            episode_ends: vec![64],
            r_demo: Some(0.0),
        };
        // Full batch (batch_size >= n) with a small learning rate.
        let guider =
            train_bc_guider(&demos, &[-1.0], &[1.0], 100, 1e-4, 64, &mut rng).unwrap();
        for pair in guider.loss_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-10,
                "loss rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn outputs_are_clipped_to_bounds() {
        let demos = DemoSet {
            env_name: "x".into(),
            obs_dim: 1,
            act_dim: 1,
            pairs: vec![(vec![0.0], vec![5.0]); 16],
            episode_ends: vec![16],
            r_demo: Some(0.0),
        };
        let mut rng = Rng::new(9);
        let guider = train_bc_guider(&demos, &[-1.0], &[1.0], 400, 1e-2, 16, &mut rng).unwrap();
        let out = guider.guide(&[0.0]).unwrap();
        assert!(out[0] <= 1.0 && out[0] >= -1.0);
    }

    #[test]
    fn empty_demo_set_is_rejected() {
        let demos = DemoSet {
            env_name: "x".into(),
            obs_dim: 1,
            act_dim: 1,
            pairs: vec![],
            episode_ends: vec![],
            r_demo: None,
        };
        let mut rng = Rng::new(0);
        assert!(train_bc_guider(&demos, &[-1.0], &[1.0], 10, 1e-3, 8, &mut rng).is_err());
    }
}
