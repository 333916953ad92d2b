//! Dense multilayer perceptrons with hand-written backpropagation.
//!
//! Layers are affine maps `z = W x + b` with ReLU on every hidden layer and
//! identity on the output layer. Weights are `[out, in]` matrices so a batch
//! of rows `X` advances as `X · Wᵀ + b`. Backward passes consume a trace of
//! the activations recorded by the matching forward call.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::Rng;

/// Fully connected network: ReLU hidden layers, identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Per-parameter gradients, shaped exactly like the network they came from.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Activations recorded by a batched forward pass: `activations[0]` is the
/// input batch, `activations[l + 1]` the output of layer `l`.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    activations: Vec<Array2<f64>>,
}

impl BatchTrace {
    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }

    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("trace has layers")
    }
}

impl Mlp {
    /// Glorot-uniform initialized network. `sizes` lists every layer width,
    /// input first, so `[2, 64, 64, 1]` is two hidden layers of 64 units.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for w in &mut net.weights {
            let (fan_out, fan_in) = (w.nrows() as f64, w.ncols() as f64);
            let limit = (6.0 / (fan_in + fan_out)).sqrt();
            for v in w.iter_mut() {
                *v = rng.uniform_in(-limit, limit);
            }
        }
        Ok(net)
    }

    /// All-zero network of the given shape.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "an Mlp needs at least an input and an output layer".to_string(),
            ));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument(
                "layer sizes must be positive".to_string(),
            ));
        }
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            weights.push(Array2::zeros((pair[1], pair[0])));
            biases.push(Array1::zeros(pair[1]));
        }
        Ok(Self {
            layer_sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    pub fn params_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Single-sample forward pass. Runs through the batched kernel so single
    /// and batched evaluation agree bit-for-bit.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::forward input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let out = self.forward_batch(&x)?;
        Ok(out.row(0).to_vec())
    }

    /// Batched forward pass over rows of `x`.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch_traced(x)?.1)
    }

    /// Batched forward pass that records the trace needed by
    /// [`Mlp::backward_batch`]. Returns `(trace, output)`.
    pub fn forward_batch_traced(&self, x: &Array2<f64>) -> Result<(BatchTrace, Array2<f64>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::forward_batch input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut activations = Vec::with_capacity(self.num_layers() + 1);
        activations.push(x.clone());
        let last = self.num_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = activations[l].dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }
        let out = activations.last().unwrap().clone();
        Ok((BatchTrace { activations }, out))
    }

    /// Backpropagates `output_grad` (the gradient of a scalar objective with
    /// respect to the batched output) through the recorded trace. Returns the
    /// parameter gradients and the gradient with respect to the input batch.
    pub fn backward_batch(
        &self,
        trace: &BatchTrace,
        output_grad: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        if trace.activations.len() != self.num_layers() + 1
            || trace.activations[0].ncols() != self.input_dim()
        {
            return Err(Error::Usage(
                "backward_batch: trace does not match this network".to_string(),
            ));
        }
        if output_grad.dim() != trace.output().dim() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::backward_batch output_grad",
                expected: trace.output().len(),
                got: output_grad.len(),
            });
        }
        let mut grads = MlpGrads::zeros_like(self);
        let mut dz = output_grad.clone();
        for l in (0..self.num_layers()).rev() {
            grads.weights[l] = dz.t().dot(&trace.activations[l]);
            grads.biases[l] = dz.sum_axis(Axis(0));
            let mut da = dz.dot(&self.weights[l]);
            if l > 0 {
                // ReLU gate: the recorded activation is already post-ReLU,
                // so a zero entry means the unit was clamped.
                da.zip_mut_with(&trace.activations[l], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            dz = da;
        }
        Ok((grads, dz))
    }

    /// Single-sample backward pass: gradient of `⟨output, output_grad⟩` with
    /// respect to every parameter and the input.
    pub fn backward(
        &self,
        trace: &BatchTrace,
        output_grad: &[f64],
    ) -> Result<(MlpGrads, Vec<f64>)> {
        if trace.batch_size() != 1 {
            return Err(Error::Usage(
                "backward: expected a single-sample trace".to_string(),
            ));
        }
        let g = Array2::from_shape_vec((1, output_grad.len()), output_grad.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let (grads, dx) = self.backward_batch(trace, &g)?;
        Ok((grads, dx.row(0).to_vec()))
    }

    /// Forward pass for a single sample, recording a trace for [`Mlp::backward`].
    pub fn forward_traced(&self, input: &[f64]) -> Result<(BatchTrace, Vec<f64>)> {
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let (trace, out) = self.forward_batch_traced(&x)?;
        Ok((trace, out.row(0).to_vec()))
    }
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            *w *= factor;
        }
        for b in &mut self.biases {
            *b *= factor;
        }
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Serialized network layout: a header with layer sizes and activation tags,
/// then row-major weight matrices and bias vectors in layer order.
#[derive(Debug, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: String,
    pub output_activation: String,
    pub layers: Vec<LayerCheckpoint>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    /// Row-major `[out][in]` weight matrix.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl MlpCheckpoint {
    pub fn from_net(net: &Mlp) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            layer_sizes: net.layer_sizes.clone(),
            hidden_activation: "relu".to_string(),
            output_activation: "identity".to_string(),
            layers: net
                .weights
                .iter()
                .zip(&net.biases)
                .map(|(w, b)| LayerCheckpoint {
                    weights: w.rows().into_iter().map(|r| r.to_vec()).collect(),
                    biases: b.to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_net(self) -> Result<Mlp> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        if self.hidden_activation != "relu" || self.output_activation != "identity" {
            return Err(Error::Config(format!(
                "unsupported activation tags {}/{}",
                self.hidden_activation, self.output_activation
            )));
        }
        let mut net = Mlp::zeros(&self.layer_sizes)?;
        if self.layers.len() != net.num_layers() {
            return Err(Error::Config(format!(
                "checkpoint has {} layers, header says {}",
                self.layers.len(),
                net.num_layers()
            )));
        }
        for (l, layer) in self.layers.into_iter().enumerate() {
            let (out_dim, in_dim) = net.weights[l].dim();
            if layer.weights.len() != out_dim
                || layer.weights.iter().any(|r| r.len() != in_dim)
                || layer.biases.len() != out_dim
            {
                return Err(Error::Config(format!(
                    "layer {l} parameter shapes do not match the header"
                )));
            }
            for (i, row) in layer.weights.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    net.weights[l][[i, j]] = v;
                }
            }
            net.biases[l] = Array1::from_vec(layer.biases);
        }
        if !net.params_finite() {
            return Err(Error::NonFinite("loaded checkpoint parameters".to_string()));
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_net_maps_everything_to_zero() {
        let net = Mlp::zeros(&[3, 4, 2]).unwrap();
        let out = net.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let mut net = Mlp::zeros(&[3, 3]).unwrap();
        for i in 0..3 {
            net.weights_mut()[0][[i, i]] = 1.0;
        }
        let x = vec![0.5, -1.5, 2.0];
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn forward_matches_hand_composed_chain() {
        // 2 -> 2 -> 1 net recomputed by straight-line arithmetic.
        let mut net = Mlp::zeros(&[2, 2, 1]).unwrap();
        net.weights_mut()[0][[0, 0]] = 0.5;
        net.weights_mut()[0][[0, 1]] = -1.0;
        net.weights_mut()[0][[1, 0]] = 2.0;
        net.weights_mut()[0][[1, 1]] = 0.25;
        net.biases_mut()[0][0] = 0.1;
        net.biases_mut()[0][1] = -0.2;
        net.weights_mut()[1][[0, 0]] = 1.5;
        net.weights_mut()[1][[0, 1]] = -0.5;
        net.biases_mut()[1][0] = 0.3;

        let x = [0.8_f64, -0.4];
        let z0: f64 = 0.5 * x[0] + (-1.0) * x[1] + 0.1;
        let z1: f64 = 2.0 * x[0] + 0.25 * x[1] - 0.2;
        let h0 = z0.max(0.0);
        let h1 = z1.max(0.0);
        let expected = 1.5 * h0 - 0.5 * h1 + 0.3;

        let out = net.forward(&x).unwrap();
        assert!((out[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn linear_net_weight_gradient_is_outer_product() {
        let mut net = Mlp::zeros(&[2, 2]).unwrap();
        net.weights_mut()[0][[0, 0]] = 1.0;
        net.weights_mut()[0][[1, 1]] = 1.0;
        let x = [0.7, -0.3];
        let g = [2.0, 5.0];
        let (trace, _) = net.forward_traced(&x).unwrap();
        let (grads, dx) = net.backward(&trace, &g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((grads.weights[0][[i, j]] - g[i] * x[j]).abs() < 1e-15);
            }
            assert!((grads.biases[0][i] - g[i]).abs() < 1e-15);
        }
        // dL/dx = Wᵀ g = g for the identity weight matrix.
        assert!((dx[0] - g[0]).abs() < 1e-15);
        assert!((dx[1] - g[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut rng = Rng::new(1);
        let net = Mlp::new(&[3, 8, 2], &mut rng).unwrap();
        let (trace, _) = net.forward_traced(&[0.1, 0.2, 0.3]).unwrap();
        let (grads, dx) = net.backward(&trace, &[0.0, 0.0]).unwrap();
        assert!(grads.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(grads.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let mut rng = Rng::new(1);
        let a = Mlp::new(&[3, 8, 2], &mut rng).unwrap();
        let b = Mlp::new(&[4, 8, 2], &mut rng).unwrap();
        let (trace, _) = a.forward_traced(&[0.1, 0.2, 0.3]).unwrap();
        assert!(b.backward(&trace, &[1.0, 0.0]).is_err());
    }

    /// Central finite differences of `⟨f(x), g⟩` over every parameter.
    fn finite_diff_param_grads(net: &Mlp, x: &[f64], g: &[f64], h: f64) -> MlpGrads {
        let mut out = MlpGrads::zeros_like(net);
        let objective = |n: &Mlp| -> f64 {
            n.forward(x)
                .unwrap()
                .iter()
                .zip(g)
                .map(|(o, gi)| o * gi)
                .sum()
        };
        let mut probe = net.clone();
        for l in 0..net.num_layers() {
            for idx in 0..net.weights[l].len() {
                let (rows, cols) = net.weights[l].dim();
                let (i, j) = (idx / cols, idx % cols);
                debug_assert!(i < rows);
                let orig = probe.weights[l][[i, j]];
                probe.weights[l][[i, j]] = orig + h;
                let plus = objective(&probe);
                probe.weights[l][[i, j]] = orig - h;
                let minus = objective(&probe);
                probe.weights[l][[i, j]] = orig;
                out.weights[l][[i, j]] = (plus - minus) / (2.0 * h);
            }
            for i in 0..net.biases[l].len() {
                let orig = probe.biases[l][i];
                probe.biases[l][i] = orig + h;
                let plus = objective(&probe);
                probe.biases[l][i] = orig - h;
                let minus = objective(&probe);
                probe.biases[l][i] = orig;
                out.biases[l][i] = (plus - minus) / (2.0 * h);
            }
        }
        out
    }

    fn assert_grad_close(analytic: f64, numeric: f64) {
        let diff = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        assert!(
            diff <= 1e-6 || diff / scale <= 1e-4,
            "analytic {analytic} vs numeric {numeric} (diff {diff})"
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let shapes: &[&[usize]] = &[&[2, 5, 1], &[3, 16, 8, 2], &[4, 32, 32, 3]];
        let mut rng = Rng::new(99);
        for sizes in shapes {
            let net = Mlp::new(sizes, &mut rng).unwrap();
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let g: Vec<f64> = (0..*sizes.last().unwrap())
                .map(|_| rng.uniform_in(-1.0, 1.0))
                .collect();
            let (trace, _) = net.forward_traced(&x).unwrap();
            let (grads, _) = net.backward(&trace, &g).unwrap();
            let fd = finite_diff_param_grads(&net, &x, &g, 1e-5);
            for l in 0..net.num_layers() {
                for (a, n) in grads.weights[l].iter().zip(fd.weights[l].iter()) {
                    assert_grad_close(*a, *n);
                }
                for (a, n) in grads.biases[l].iter().zip(fd.biases[l].iter()) {
                    assert_grad_close(*a, *n);
                }
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = Rng::new(7);
        let net = Mlp::new(&[3, 16, 2], &mut rng).unwrap();
        let x = vec![0.3, -0.8, 0.5];
        let g = vec![1.0, -2.0];
        let (trace, _) = net.forward_traced(&x).unwrap();
        let (_, dx) = net.backward(&trace, &g).unwrap();
        let h = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fp: f64 = net.forward(&xp).unwrap().iter().zip(&g).map(|(o, gi)| o * gi).sum();
            let fm: f64 = net.forward(&xm).unwrap().iter().zip(&g).map(|(o, gi)| o * gi).sum();
            assert_grad_close(dx[i], (fp - fm) / (2.0 * h));
        }
    }

    #[test]
    fn batched_forward_agrees_with_single_sample() {
        let mut rng = Rng::new(5);
        let net = Mlp::new(&[3, 10, 2], &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.uniform_in(-2.0, 2.0)).collect())
            .collect();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let x = Array2::from_shape_vec((4, 3), flat).unwrap();
        let out = net.forward_batch(&x).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let single = net.forward(row).unwrap();
            for j in 0..2 {
                assert_eq!(out[[i, j]].to_bits(), single[j].to_bits());
            }
        }
    }

    #[test]
    fn bias_free_net_is_positively_homogeneous() {
        // With zero biases and an input that keeps every hidden unit active,
        // doubling the input doubles the output.
        let mut rng = Rng::new(11);
        let mut net = Mlp::new(&[2, 6, 1], &mut rng).unwrap();
        for b in net.biases_mut() {
            b.fill(0.0);
        }
        // Make all first-layer weights positive so a positive input activates
        // every ReLU.
        for w in net.weights_mut()[0].iter_mut() {
            *w = w.abs() + 0.01;
        }
        let x = [0.4, 0.9];
        let x2 = [0.8, 1.8];
        let y = net.forward(&x).unwrap()[0];
        let y2 = net.forward(&x2).unwrap()[0];
        assert!((y2 - 2.0 * y).abs() < 1e-12, "{y2} vs {}", 2.0 * y);
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let mut rng = Rng::new(3);
        let net = Mlp::new(&[2, 8, 3], &mut rng).unwrap();
        let json = serde_json::to_string(&MlpCheckpoint::from_net(&net)).unwrap();
        let back: MlpCheckpoint = serde_json::from_str(&json).unwrap();
        let restored = back.into_net().unwrap();
        assert_eq!(net, restored);
    }

    #[test]
    fn checkpoint_rejects_shape_mismatch() {
        let net = Mlp::zeros(&[2, 3]).unwrap();
        let mut ck = MlpCheckpoint::from_net(&net);
        ck.layers[0].biases.pop();
        assert!(ck.into_net().is_err());
    }
}
