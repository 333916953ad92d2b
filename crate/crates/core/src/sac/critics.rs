//! Twin soft Q-networks, the state-value network, and its Polyak target.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::numerics::{Mlp, Rng};

/// Q/V function approximators plus the entropy temperature, discount, and
/// Polyak coefficient they are trained with.
#[derive(Debug, Clone)]
pub struct SoftCritics {
    pub q1: Mlp,
    pub q2: Mlp,
    pub v: Mlp,
    pub v_target: Mlp,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    obs_dim: usize,
    act_dim: usize,
    /// Per-dimension input scale; state inputs are divided by this.
    obs_scale: Vec<f64>,
}

impl SoftCritics {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        alpha: f64,
        gamma: f64,
        rho: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(Error::InvalidArgument("alpha must be > 0".to_string()));
        }
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(Error::InvalidArgument("gamma must be in (0, 1)".to_string()));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument("rho must be in [0, 1]".to_string()));
        }
        let mut q_sizes = vec![obs_dim + act_dim];
        q_sizes.extend_from_slice(hidden);
        q_sizes.push(1);
        let mut v_sizes = vec![obs_dim];
        v_sizes.extend_from_slice(hidden);
        v_sizes.push(1);

        let q1 = Mlp::new(&q_sizes, rng)?;
        let q2 = Mlp::new(&q_sizes, rng)?;
        let v = Mlp::new(&v_sizes, rng)?;
        // Target starts as an exact copy of the online value network.
        let v_target = v.clone();
        Ok(Self {
            q1,
            q2,
            v,
            v_target,
            alpha,
            gamma,
            rho,
            obs_dim,
            act_dim,
            obs_scale: vec![1.0; obs_dim],
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
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

    /// Concatenates scaled state and raw action rows into the Q-network
    /// input layout.
    pub fn join_state_action(&self, s: &Array2<f64>, a: &Array2<f64>) -> Result<Array2<f64>> {
        if s.nrows() != a.nrows() {
            return Err(Error::InvalidArgument(
                "state and action batches differ in length".to_string(),
            ));
        }
        if s.ncols() != self.obs_dim || a.ncols() != self.act_dim {
            return Err(Error::DimensionMismatch {
                context: "join_state_action",
                expected: self.obs_dim + self.act_dim,
                got: s.ncols() + a.ncols(),
            });
        }
        let n = s.nrows();
        let mut joined = Array2::zeros((n, self.obs_dim + self.act_dim));
        joined
            .slice_mut(ndarray::s![.., ..self.obs_dim])
            .assign(&self.normalize_states(s));
        joined.slice_mut(ndarray::s![.., self.obs_dim..]).assign(a);
        Ok(joined)
    }

    /// `min(Q1, Q2)` per sample, without gradients.
    pub fn min_q(&self, s: &Array2<f64>, a: &Array2<f64>) -> Result<Array1<f64>> {
        let x = self.join_state_action(s, a)?;
        let q1 = self.q1.forward_batch(&x)?;
        let q2 = self.q2.forward_batch(&x)?;
        Ok(Array1::from_iter(
            q1.column(0)
                .iter()
                .zip(q2.column(0).iter())
                .map(|(&a, &b)| a.min(b)),
        ))
    }

    /// Batched target-value forward pass on raw states.
    pub fn v_target_values(&self, s: &Array2<f64>) -> Result<Array1<f64>> {
        let out = self.v_target.forward_batch(&self.normalize_states(s))?;
        Ok(out.index_axis(Axis(1), 0).to_owned())
    }
}

/// Anything that can report `min(Q1, Q2)` and its gradient with respect to
/// the action. The production implementation backpropagates through the
/// per-sample argmin critic; tests substitute analytic critics.
pub trait ActionCritic {
    fn q_and_action_grad(&self, s: &Array2<f64>, a: &Array2<f64>)
        -> Result<(Array1<f64>, Array2<f64>)>;
}

impl ActionCritic for SoftCritics {
    fn q_and_action_grad(
        &self,
        s: &Array2<f64>,
        a: &Array2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>)> {
        let n = s.nrows();
        let x = self.join_state_action(s, a)?;
        let (trace1, out1) = self.q1.forward_batch_traced(&x)?;
        let (trace2, out2) = self.q2.forward_batch_traced(&x)?;

        // Route the gradient through whichever critic attains the minimum.
        let mut mask1 = Array2::zeros((n, 1));
        let mut mask2 = Array2::zeros((n, 1));
        let mut qmin = Array1::zeros(n);
        for i in 0..n {
            if out1[[i, 0]] <= out2[[i, 0]] {
                mask1[[i, 0]] = 1.0;
                qmin[i] = out1[[i, 0]];
            } else {
                mask2[[i, 0]] = 1.0;
                qmin[i] = out2[[i, 0]];
            }
        }
        let (_, dx1) = self.q1.backward_batch(&trace1, &mask1)?;
        let (_, dx2) = self.q2.backward_batch(&trace2, &mask2)?;
        let action_grad = dx1.slice(ndarray::s![.., self.obs_dim..]).to_owned()
            + dx2.slice(ndarray::s![.., self.obs_dim..]);
        Ok((qmin, action_grad))
    }
}

/// Polyak target maintenance: every target parameter becomes
/// `ρ·target + (1-ρ)·online`.
pub fn polyak_update(critics: &mut SoftCritics) {
    let rho = critics.rho;
    for (tw, ow) in critics
        .v_target
        .weights_mut()
        .iter_mut()
        .zip(critics.v.weights())
    {
        tw.zip_mut_with(ow, |t, &o| *t = rho * *t + (1.0 - rho) * o);
    }
    for (tb, ob) in critics
        .v_target
        .biases_mut()
        .iter_mut()
        .zip(critics.v.biases())
    {
        tb.zip_mut_with(ob, |t, &o| *t = rho * *t + (1.0 - rho) * o);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn critics(rho: f64) -> SoftCritics {
        let mut rng = Rng::new(0);
        SoftCritics::new(2, 1, &[8], 0.2, 0.99, rho, &mut rng).unwrap()
    }

    #[test]
    fn construction_validates_hyperparameters() {
        let mut rng = Rng::new(0);
        assert!(SoftCritics::new(2, 1, &[8], 0.0, 0.99, 0.995, &mut rng).is_err());
        assert!(SoftCritics::new(2, 1, &[8], 0.2, 1.0, 0.995, &mut rng).is_err());
        assert!(SoftCritics::new(2, 1, &[8], 0.2, 0.99, 1.5, &mut rng).is_err());
    }

    #[test]
    fn target_starts_identical_to_online() {
        let c = critics(0.995);
        assert_eq!(c.v, c.v_target);
    }

    #[test]
    fn polyak_rho_one_freezes_target() {
        let mut c = critics(1.0);
        let before = c.v_target.clone();
        c.v.weights_mut()[0][[0, 0]] += 5.0;
        polyak_update(&mut c);
        assert_eq!(c.v_target, before);
    }

    #[test]
    fn polyak_rho_zero_copies_online() {
        let mut c = critics(0.0);
        c.v.weights_mut()[0][[0, 0]] += 5.0;
        polyak_update(&mut c);
        assert_eq!(c.v_target, c.v);
    }

    #[test]
    fn polyak_scalar_arithmetic() {
        let mut c = critics(0.995);
        // Force a scalar pair (target 0, online 1) and check t' = 0.005.
        c.v_target.weights_mut()[0][[0, 0]] = 0.0;
        c.v.weights_mut()[0][[0, 0]] = 1.0;
        polyak_update(&mut c);
        assert!((c.v_target.weights()[0][[0, 0]] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn polyak_is_an_exact_contraction() {
        let mut c = critics(0.9);
        c.v.weights_mut()[0][[0, 0]] = 2.0;
        let dist = |c: &SoftCritics| -> f64 {
            let mut acc: f64 = 0.0;
            for (t, o) in c.v_target.weights().iter().zip(c.v.weights()) {
                for (a, b) in t.iter().zip(o.iter()) {
                    acc += (a - b) * (a - b);
                }
            }
            for (t, o) in c.v_target.biases().iter().zip(c.v.biases()) {
                for (a, b) in t.iter().zip(o.iter()) {
                    acc += (a - b) * (a - b);
                }
            }
            acc.sqrt()
        };
        let d0 = dist(&c);
        polyak_update(&mut c);
        let d1 = dist(&c);
        assert!((d1 - 0.9 * d0).abs() < 1e-12, "{d1} vs {}", 0.9 * d0);
    }

    #[test]
    fn min_q_is_symmetric_in_the_twins() {
        let c = critics(0.995);
        let mut swapped = c.clone();
        std::mem::swap(&mut swapped.q1, &mut swapped.q2);
        let s = Array2::from_shape_vec((4, 2), (0..8).map(|i| i as f64 * 0.1).collect()).unwrap();
        let a = Array2::from_shape_vec((4, 1), vec![0.1, -0.2, 0.3, -0.4]).unwrap();
        let m1 = c.min_q(&s, &a).unwrap();
        let m2 = swapped.min_q(&s, &a).unwrap();
        for (x, y) in m1.iter().zip(m2.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let (q1, g1) = c.q_and_action_grad(&s, &a).unwrap();
        let (q2, g2) = swapped.q_and_action_grad(&s, &a).unwrap();
        for (x, y) in q1.iter().zip(q2.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in g1.iter().zip(g2.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn action_gradient_matches_finite_differences() {
        let c = critics(0.995);
        let s = Array2::from_shape_vec((3, 2), vec![0.1, -0.4, 0.9, 0.2, -0.6, 0.5]).unwrap();
        let a = Array2::from_shape_vec((3, 1), vec![0.3, -0.1, 0.8]).unwrap();
        let (_, grad) = c.q_and_action_grad(&s, &a).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut ap = a.clone();
            ap[[i, 0]] += h;
            let mut am = a.clone();
            am[[i, 0]] -= h;
            let qp = c.min_q(&s, &ap).unwrap()[i];
            let qm = c.min_q(&s, &am).unwrap()[i];
            let fd = (qp - qm) / (2.0 * h);
            assert!(
                (grad[[i, 0]] - fd).abs() < 1e-5,
                "sample {i}: {} vs {fd}",
                grad[[i, 0]]
            );
        }
    }
}
