//! SAC regression targets, losses, and gradient steps.
//!
//! Targets follow the soft Bellman forms: `y_q = r + γ(1-done)·V'(s')` and
//! `y_v = min(Q1, Q2)(s, ã) - α·log π(ã|s)` at a fresh policy sample ã. Q and
//! V minimize half mean-squared error against those fixed targets; the policy
//! ascends `min Q(s, f(s)) - α·log π(f(s)|s)` through the reparameterized
//! sample, with the critics frozen.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::numerics::{Mlp, MlpGrads, Optimizer};
use crate::replay::Batch;

use super::critics::{ActionCritic, SoftCritics};
use super::policy::{GaussianPolicy, LOG_SIGMA_MAX, LOG_SIGMA_MIN};

/// Per-sample regression targets for one update iteration, computed without
/// gradient tracking.
#[derive(Debug, Clone)]
pub struct Targets {
    pub y_q: Array1<f64>,
    pub y_v: Array1<f64>,
}

/// Computes `y_q` and `y_v` for a minibatch. `noise` supplies the ξ for the
/// fresh policy sample at `batch.s` (one row per sample).
pub fn compute_targets(
    critics: &SoftCritics,
    policy: &GaussianPolicy,
    batch: &Batch,
    noise: &Array2<f64>,
) -> Result<Targets> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("compute_targets: empty batch".to_string()));
    }
    let v_next = critics.v_target_values(&batch.s_next)?;
    let mut y_q = Array1::zeros(batch.len());
    for i in 0..batch.len() {
        y_q[i] = batch.r[i] + critics.gamma * (1.0 - batch.done[i]) * v_next[i];
    }

    let sample = policy.sample_batch(&batch.s, noise)?;
    let q_min = critics.min_q(&batch.s, &sample.action)?;
    let mut y_v = Array1::zeros(batch.len());
    for i in 0..batch.len() {
        y_v[i] = q_min[i] - critics.alpha * sample.log_prob[i];
    }
    Ok(Targets { y_q, y_v })
}

/// Half mean-squared error of a critic's scalar outputs against targets, and
/// the output gradient of that loss.
fn mse_and_grad(outputs: &Array2<f64>, targets: &Array1<f64>) -> (f64, Array2<f64>) {
    let n = targets.len() as f64;
    let mut grad = Array2::zeros(outputs.dim());
    let mut loss = 0.0;
    for i in 0..targets.len() {
        let residual = outputs[[i, 0]] - targets[i];
        loss += 0.5 * residual * residual;
        grad[[i, 0]] = residual / n;
    }
    (loss / n, grad)
}

fn regress_scalar_net(
    net: &mut Mlp,
    inputs: &Array2<f64>,
    targets: &Array1<f64>,
    opt: &mut Optimizer,
    what: &'static str,
) -> Result<f64> {
    let (trace, outputs) = net.forward_batch_traced(inputs)?;
    let (loss, grad) = mse_and_grad(&outputs, targets);
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("{what} loss = {loss}")));
    }
    let (grads, _) = net.backward_batch(&trace, &grad)?;
    opt.step(net, &grads)?;
    Ok(loss)
}

/// One optimizer step on each Q-network against the shared targets; returns
/// the mean of the two losses.
pub fn q_update(
    critics: &mut SoftCritics,
    batch: &Batch,
    y_q: &Array1<f64>,
    opt_q1: &mut Optimizer,
    opt_q2: &mut Optimizer,
) -> Result<f64> {
    if y_q.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            context: "q_update targets",
            expected: batch.len(),
            got: y_q.len(),
        });
    }
    let x = critics.join_state_action(&batch.s, &batch.a)?;
    let l1 = regress_scalar_net(&mut critics.q1, &x, y_q, opt_q1, "J_Q(phi1)")?;
    let l2 = regress_scalar_net(&mut critics.q2, &x, y_q, opt_q2, "J_Q(phi2)")?;
    Ok(0.5 * (l1 + l2))
}

/// One optimizer step on the value network. `states` are raw observations.
pub fn v_update(
    critics: &mut SoftCritics,
    states: &Array2<f64>,
    y_v: &Array1<f64>,
    opt_v: &mut Optimizer,
) -> Result<f64> {
    if y_v.len() != states.nrows() {
        return Err(Error::DimensionMismatch {
            context: "v_update targets",
            expected: states.nrows(),
            got: y_v.len(),
        });
    }
    let scaled = critics.normalize_states(states);
    regress_scalar_net(&mut critics.v, &scaled, y_v, opt_v, "J_V(psi)")
}

/// One ascent step on the policy objective
/// `J_π = mean[min Q(s, f(s)) - α·log π(f(s)|s)]` through the reparameterized
/// sample. The critic only supplies values and action-gradients; its own
/// parameters are untouched. Returns the objective estimate before the step.
pub fn policy_update<C: ActionCritic>(
    policy: &mut GaussianPolicy,
    critic: &C,
    alpha: f64,
    states: &Array2<f64>,
    noise: &Array2<f64>,
    opt: &mut Optimizer,
) -> Result<f64> {
    let n = states.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("policy_update: empty batch".to_string()));
    }
    let sample = policy.sample_batch(states, noise)?;
    let (q_min, q_action_grad) = critic.q_and_action_grad(states, &sample.action)?;

    let objective = (0..n)
        .map(|i| q_min[i] - alpha * sample.log_prob[i])
        .sum::<f64>()
        / n as f64;
    if !objective.is_finite() {
        return Err(Error::NonFinite(format!("J_pi = {objective}")));
    }

    // Head gradients of the per-sample objective. For each action dim:
    //   dJ/dμ      = qa·R(1-t²)        - α·2t
    //   dJ/d logσ  = qa·R(1-t²)·σξ     - α·(2tσξ - 1)
    // where qa = ∂minQ/∂a. The clamp on log σ zeroes its gradient outside
    // [LOG_SIGMA_MIN, LOG_SIGMA_MAX].
    let act_dim = policy.act_dim();
    let half_range = policy.half_range().to_vec();
    let mut head_grad = Array2::zeros((n, 2 * act_dim));
    let scale = -1.0 / n as f64; // ascend J by descending -J
    for i in 0..n {
        for j in 0..act_dim {
            let t = sample.t[[i, j]];
            let dtanh = 1.0 - t * t;
            let qa = q_action_grad[[i, j]] * half_range[j] * dtanh;
            let sigma_xi = sample.sigma[[i, j]] * sample.noise[[i, j]];
            let d_mu = qa - alpha * 2.0 * t;
            let mut d_logsig = qa * sigma_xi - alpha * (2.0 * t * sigma_xi - 1.0);
            let raw = sample.log_sigma_raw[[i, j]];
            if !(LOG_SIGMA_MIN..=LOG_SIGMA_MAX).contains(&raw) {
                d_logsig = 0.0;
            }
            head_grad[[i, j]] = scale * d_mu;
            head_grad[[i, act_dim + j]] = scale * d_logsig;
        }
    }

    let (grads, _): (MlpGrads, _) = policy.trunk().backward_batch(&sample.trace, &head_grad)?;
    if !grads.is_finite() {
        return Err(Error::NonFinite("policy gradient".to_string()));
    }
    opt.step(policy.trunk_mut(), &grads)?;
    Ok(objective)
}
