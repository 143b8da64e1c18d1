//! Feed-forward networks with hand-written backpropagation and ADAM.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::path_rng;

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Relu,
    /// Smooth surrogates, used for gradient checks.
    Softplus,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Softplus => {
                if x > 30.0 {
                    x
                } else {
                    x.exp().ln_1p()
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => 1.0 - x.tanh().powi(2),
        }
    }
}

/// Dense network `F → m_1 → … → m_I → out` with activations between layers
/// and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    /// `weights[k]` has shape `sizes[k] × sizes[k+1]`.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Intermediate values of a forward pass kept for backpropagation.
pub struct Tape {
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().expect("network has layers")
    }
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Mlp {
    /// He-uniform initialisation (Glorot for `tanh`), zero biases.
    pub fn new(sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = path_rng(seed, u64::MAX);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0] as f64, w[1] as f64);
            let bound = match activation {
                Activation::Tanh => (6.0 / (fan_in + fan_out)).sqrt(),
                _ => (6.0 / fan_in).sqrt(),
            };
            weights.push(Array2::from_shape_simple_fn((w[0], w[1]), || {
                rng.random_range(-bound..bound)
            }));
            biases.push(Array1::zeros(w[1]));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            activation,
            weights,
            biases,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("sizes non-empty")
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn forward_train(&self, x: ArrayView2<'_, f64>) -> Tape {
        let layers = self.weights.len();
        let mut pre = Vec::with_capacity(layers);
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(layers);
        for k in 0..layers {
            let input = if k == 0 { x } else { post[k - 1].view() };
            let mut a = input.dot(&self.weights[k]);
            a += &self.biases[k];
            let h = if k + 1 < layers {
                let act = self.activation;
                a.mapv(|v| act.apply(v))
            } else {
                a.clone()
            };
            pre.push(a);
            post.push(h);
        }
        Tape { pre, post }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let layers = self.weights.len();
        let mut h = x.dot(&self.weights[0]) + &self.biases[0];
        for k in 1..layers {
            let act = self.activation;
            h.mapv_inplace(|v| act.apply(v));
            h = h.dot(&self.weights[k]) + &self.biases[k];
        }
        h
    }

    /// Backpropagate `grad_out = ∂loss/∂output` through a recorded pass.
    pub fn backward(&self, x: ArrayView2<'_, f64>, tape: &Tape, grad_out: ArrayView2<'_, f64>) -> Gradients {
        let layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        let mut delta = grad_out.to_owned();
        for k in (0..layers).rev() {
            let input = if k == 0 { x } else { tape.post[k - 1].view() };
            gw[k] = input.t().dot(&delta).as_standard_layout().into_owned();
            gb[k] = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut back = delta.dot(&self.weights[k].t());
                let act = self.activation;
                back.zip_mut_with(&tape.pre[k - 1], |g, z| *g *= act.derivative(*z));
                delta = back;
            }
        }
        Gradients {
            weights: gw,
            biases: gb,
        }
    }

    /// Parameters flattened layer by layer (weights then bias).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "{} parameters expected, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut pos = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = flat[pos];
                pos += 1;
            }
            for v in b.iter_mut() {
                *v = flat[pos];
                pos += 1;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// ADAM with bias-corrected moments over a list of parameter tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update of every `(params, grads)` pair.
    pub fn step(&mut self, tensors: &mut [(&mut [f64], &[f64])]) {
        if self.m.len() != tensors.len() {
            self.m = tensors.iter().map(|(p, _)| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in tensors.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }

    /// Apply network gradients.
    pub fn step_mlp(&mut self, net: &mut Mlp, grads: &Gradients) {
        let mut tensors: Vec<(&mut [f64], &[f64])> = Vec::new();
        for ((w, b), (gw, gb)) in net
            .weights
            .iter_mut()
            .zip(net.biases.iter_mut())
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            tensors.push((
                w.as_slice_mut().expect("standard layout"),
                gw.as_slice().expect("standard layout"),
            ));
            tensors.push((
                b.as_slice_mut().expect("standard layout"),
                gb.as_slice().expect("standard layout"),
            ));
        }
        self.step(&mut tensors);
    }
}

/// Mini-batch training controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            batch_size: 128,
            lr: 1e-3,
            seed: 0,
        }
    }
}

/// Mean squared error of a network on `(x, z)`.
pub fn mse(net: &Mlp, x: ArrayView2<'_, f64>, z: &[f64]) -> f64 {
    let y = net.forward(x);
    y.column(0).iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / z.len().max(1) as f64
}

/// Fit a single-output network to `z` by mean-squared error. Returns the
/// full-data loss after each epoch.
pub fn mlp_fit(net: &mut Mlp, x: ArrayView2<'_, f64>, z: &[f64], cfg: &TrainConfig, stream: u64) -> Result<Vec<f64>> {
    let m = x.nrows();
    if z.len() != m || x.ncols() != net.input_dim() || net.output_dim() != 1 {
        return Err(Error::Dimension("network fit shapes disagree".into()));
    }
    let mut adam = Adam::new(cfg.lr);
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = path_rng(cfg.seed, stream);
    let bs = cfg.batch_size.max(1);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            let xb = x.select(Axis(0), chunk);
            let tape = net.forward_train(xb.view());
            let out = tape.output();
            let scale = 2.0 / chunk.len() as f64;
            let grad = Array2::from_shape_fn((chunk.len(), 1), |(r, _)| scale * (out[(r, 0)] - z[chunk[r]]));
            let g = net.backward(xb.view(), &tape, grad.view());
            adam.step_mlp(net, &g);
        }
        let loss = mse(net, x, z);
        if !loss.is_finite() || !net.is_finite() {
            return Err(Error::Divergence(format!(
                "loss became non-finite at epoch {epoch} with learning rate {}; lower it",
                cfg.lr
            )));
        }
        losses.push(loss);
    }
    Ok(losses)
}
