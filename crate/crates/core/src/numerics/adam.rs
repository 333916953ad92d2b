//! Adam optimizer with bias correction, plus a plain-SGD fallback.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::mlp::{Mlp, MlpGrads};

/// First/second moment accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_w: net.weights().iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_w: net.weights().iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_b: net.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
            v_b: net.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update of `net` along `-grads`. The step counter increments by
/// exactly one; shapes are checked against the network first.
pub fn adam_step(net: &mut Mlp, grads: &MlpGrads, state: &mut AdamState) -> Result<()> {
    check_shapes(net, grads, "adam_step")?;
    if state.m_w.len() != net.num_layers() || state.m_w[0].dim() != net.weights()[0].dim() {
        return Err(Error::Usage(
            "adam_step: optimizer state shaped for a different network".to_string(),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.eps, state.lr);

    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };

    for l in 0..net.num_layers() {
        let w = &mut net.weights_mut()[l];
        for ((p, &g), (m, v)) in w
            .iter_mut()
            .zip(grads.weights[l].iter())
            .zip(state.m_w[l].iter_mut().zip(state.v_w[l].iter_mut()))
        {
            update(p, g, m, v);
        }
        let b = &mut net.biases_mut()[l];
        for ((p, &g), (m, v)) in b
            .iter_mut()
            .zip(grads.biases[l].iter())
            .zip(state.m_b[l].iter_mut().zip(state.v_b[l].iter_mut()))
        {
            update(p, g, m, v);
        }
    }
    if !net.params_finite() {
        return Err(Error::NonFinite("parameters after adam_step".to_string()));
    }
    Ok(())
}

/// SGD is kept selectable for ablations against Adam.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(AdamState),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn adam(net: &Mlp, lr: f64) -> Self {
        Optimizer::Adam(AdamState::new(net, lr))
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads) -> Result<()> {
        match self {
            Optimizer::Adam(state) => adam_step(net, grads, state),
            Optimizer::Sgd { lr } => sgd_step(net, grads, *lr),
        }
    }
}

fn sgd_step(net: &mut Mlp, grads: &MlpGrads, lr: f64) -> Result<()> {
    check_shapes(net, grads, "sgd_step")?;
    for l in 0..net.num_layers() {
        net.weights_mut()[l].zip_mut_with(&grads.weights[l], |p, &g| *p -= lr * g);
        net.biases_mut()[l].zip_mut_with(&grads.biases[l], |p, &g| *p -= lr * g);
    }
    if !net.params_finite() {
        return Err(Error::NonFinite("parameters after sgd_step".to_string()));
    }
    Ok(())
}

fn check_shapes(net: &Mlp, grads: &MlpGrads, context: &'static str) -> Result<()> {
    let ok = grads.weights.len() == net.num_layers()
        && grads.biases.len() == net.num_layers()
        && net
            .weights()
            .iter()
            .zip(&grads.weights)
            .all(|(w, g)| w.dim() == g.dim())
        && net
            .biases()
            .iter()
            .zip(&grads.biases)
            .all(|(b, g)| b.len() == g.len());
    if ok {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{context}: gradient shapes do not match the network"
        )))
    }
}

/// Serializable snapshot of an [`AdamState`], stored in checkpoint bundles.
#[derive(Debug, Serialize, Deserialize)]
pub struct AdamCheckpoint {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m_w: Vec<Vec<f64>>,
    pub v_w: Vec<Vec<f64>>,
    pub m_b: Vec<Vec<f64>>,
    pub v_b: Vec<Vec<f64>>,
}

impl AdamCheckpoint {
    pub fn from_state(state: &AdamState) -> Self {
        let flatten2 = |xs: &[Array2<f64>]| xs.iter().map(|a| a.iter().copied().collect()).collect();
        let flatten1 = |xs: &[Array1<f64>]| xs.iter().map(|a| a.to_vec()).collect();
        Self {
            lr: state.lr,
            beta1: state.beta1,
            beta2: state.beta2,
            eps: state.eps,
            step: state.step,
            m_w: flatten2(&state.m_w),
            v_w: flatten2(&state.v_w),
            m_b: flatten1(&state.m_b),
            v_b: flatten1(&state.v_b),
        }
    }

    /// Rebuilds the state for `net`; the flattened moments must match the
    /// network's parameter shapes.
    pub fn into_state(self, net: &Mlp) -> Result<AdamState> {
        let mut state = AdamState::new(net, self.lr);
        state.beta1 = self.beta1;
        state.beta2 = self.beta2;
        state.eps = self.eps;
        state.step = self.step;
        let fill2 = |dst: &mut Vec<Array2<f64>>, src: Vec<Vec<f64>>| -> Result<()> {
            if dst.len() != src.len() {
                return Err(Error::Config("optimizer state layer count mismatch".into()));
            }
            for (d, s) in dst.iter_mut().zip(src) {
                if d.len() != s.len() {
                    return Err(Error::Config("optimizer state shape mismatch".into()));
                }
                for (dv, sv) in d.iter_mut().zip(s) {
                    *dv = sv;
                }
            }
            Ok(())
        };
        let fill1 = |dst: &mut Vec<Array1<f64>>, src: Vec<Vec<f64>>| -> Result<()> {
            if dst.len() != src.len() {
                return Err(Error::Config("optimizer state layer count mismatch".into()));
            }
            for (d, s) in dst.iter_mut().zip(src) {
                if d.len() != s.len() {
                    return Err(Error::Config("optimizer state shape mismatch".into()));
                }
                *d = Array1::from_vec(s);
            }
            Ok(())
        };
        fill2(&mut state.m_w, self.m_w)?;
        fill2(&mut state.v_w, self.v_w)?;
        fill1(&mut state.m_b, self.m_b)?;
        fill1(&mut state.v_b, self.v_b)?;
        Ok(state)
    }
}
