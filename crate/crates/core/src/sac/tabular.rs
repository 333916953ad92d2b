//! Tabular soft policy iteration, used as an independent oracle for the
//! network targets: repeatedly apply
//! `Q(s,a) ← r(s,a) + γ·E[V(s')]` and `V(s) ← E_a[Q(s,a) - α·log π(a|s)]`
//! for a fixed policy until the fixed point is reached.

use crate::error::{Error, Result};

/// Finite MDP: `reward[s][a]` and `transition[s][a][s']`.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub reward: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
}

impl TabularMdp {
    pub fn validate(&self) -> Result<()> {
        if self.reward.len() != self.n_states
            || self.reward.iter().any(|r| r.len() != self.n_actions)
        {
            return Err(Error::InvalidArgument("reward table shape".to_string()));
        }
        if self.transition.len() != self.n_states {
            return Err(Error::InvalidArgument("transition table shape".to_string()));
        }
        for row in &self.transition {
            if row.len() != self.n_actions {
                return Err(Error::InvalidArgument("transition table shape".to_string()));
            }
            for probs in row {
                if probs.len() != self.n_states {
                    return Err(Error::InvalidArgument("transition table shape".to_string()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidArgument(
                        "transition rows must be probability distributions".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Soft Q/V fixed point for a fixed stochastic policy `policy[s][a]`.
/// Stops once the sup-norm change over a sweep drops below `tol`; fails after
/// `max_sweeps` sweeps without convergence.
pub fn soft_iteration(
    mdp: &TabularMdp,
    policy: &[Vec<f64>],
    alpha: f64,
    gamma: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    mdp.validate()?;
    if policy.len() != mdp.n_states || policy.iter().any(|p| p.len() != mdp.n_actions) {
        return Err(Error::InvalidArgument("policy table shape".to_string()));
    }
    for probs in policy {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument(
                "policy rows must be probability distributions".to_string(),
            ));
        }
    }

    let mut q = vec![vec![0.0; mdp.n_actions]; mdp.n_states];
    let mut v = vec![0.0; mdp.n_states];
    for sweep in 0..max_sweeps {
        let mut delta: f64 = 0.0;
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let expected_v: f64 = mdp.transition[s][a]
                    .iter()
                    .zip(&v)
                    .map(|(&p, &vn)| p * vn)
                    .sum();
                let new_q = mdp.reward[s][a] + gamma * expected_v;
                delta = delta.max((new_q - q[s][a]).abs());
                q[s][a] = new_q;
            }
        }
        for s in 0..mdp.n_states {
            let mut new_v = 0.0;
            for a in 0..mdp.n_actions {
                let p = policy[s][a];
                if p > 0.0 {
                    new_v += p * (q[s][a] - alpha * p.ln());
                }
            }
            delta = delta.max((new_v - v[s]).abs());
            v[s] = new_v;
        }
        if delta < tol {
            log::debug!("soft_iteration converged after {} sweeps", sweep + 1);
            return Ok((q, v));
        }
    }
    Err(Error::Convergence(format!(
        "soft_iteration exceeded {max_sweeps} sweeps"
    )))
}

/// Largest violation of the two fixed-point equations; an independent check
/// that a `(Q, V)` pair really is the soft fixed point.
pub fn soft_residual(
    mdp: &TabularMdp,
    policy: &[Vec<f64>],
    alpha: f64,
    gamma: f64,
    q: &[Vec<f64>],
    v: &[f64],
) -> f64 {
    let mut residual: f64 = 0.0;
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let expected_v: f64 = mdp.transition[s][a]
                .iter()
                .zip(v)
                .map(|(&p, &vn)| p * vn)
                .sum();
            residual = residual.max((q[s][a] - (mdp.reward[s][a] + gamma * expected_v)).abs());
        }
        let mut rhs = 0.0;
        for a in 0..mdp.n_actions {
            let p = policy[s][a];
            if p > 0.0 {
                rhs += p * (q[s][a] - alpha * p.ln());
            }
        }
        residual = residual.max((v[s] - rhs).abs());
    }
    residual
}
