//! Feedforward network with logistic hidden units and a linear scalar
//! output, trained by full-batch gradient descent on mean squared error.
//!
//! Parameters are stored per layer as a row-major `fan_out x fan_in`
//! weight matrix followed by a bias vector. The flat parameter order used
//! by [`Network::parameters`] and the CSV dump is: layer by layer, weights
//! row-major, then that layer's biases.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspace::ArchSpec;
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training diverged at epoch {epoch} (non-finite loss or parameters)")]
    DivergedTraining { epoch: usize },
    #[error("empty sample set")]
    EmptySet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
}

/// A single training or evaluation example.
pub trait Example {
    fn features(&self) -> &[f64];
    fn target(&self) -> f64;
}

impl Example for (Vec<f64>, f64) {
    fn features(&self) -> &[f64] {
        &self.0
    }
    fn target(&self) -> f64 {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major, `fan_out * fan_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * self.fan_in..(j + 1) * self.fan_in];
            *o = self.biases[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
}

/// Gradient with the same layout as the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|&g| g == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, learning_rate: f64, seed: u64) -> Result<Self, MlpError> {
        let cfg = Self {
            epochs,
            learning_rate,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.epochs == 0 {
            return Err(MlpError::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MlpError::InvalidConfig(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Mean absolute error in percentage points of return.
    pub mae_pct: f64,
    /// Sum of squared errors in return units.
    pub sse: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.biases);
    }
    out
}

impl Network {
    /// Random initialization: weights uniform in `±1/sqrt(fan_in)`, drawn
    /// layer by layer in row-major order; biases start at zero and consume
    /// no draws.
    pub fn init(spec: &ArchSpec, input_dim: usize, seed: u64) -> Result<Self, MlpError> {
        let mut net = Self::zeros(spec, input_dim)?;
        let mut rng = SplitMix64::new(seed);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.fan_in as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.uniform_symmetric(bound);
            }
        }
        Ok(net)
    }

    /// All-zero parameters with the shape implied by `spec`.
    pub fn zeros(spec: &ArchSpec, input_dim: usize) -> Result<Self, MlpError> {
        if input_dim == 0 {
            return Err(MlpError::InvalidShape("input_dim must be >= 1".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend(spec.widths().iter().map(|&w| w as usize));
        dims.push(1);
        Self::with_dims(dims)
    }

    fn with_dims(layer_dims: Vec<usize>) -> Result<Self, MlpError> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) || *layer_dims.last().unwrap() != 1 {
            return Err(MlpError::InvalidShape(format!("{layer_dims:?}")));
        }
        let layers = layer_dims.windows(2).map(|d| Layer::zeros(d[0], d[1])).collect();
        Ok(Self { layer_dims, layers })
    }

    /// Rebuild a network from dimensions and a flat parameter vector in
    /// dump order.
    pub fn from_parameters(layer_dims: Vec<usize>, params: &[f64]) -> Result<Self, MlpError> {
        let mut net = Self::with_dims(layer_dims)?;
        if params.len() != net.parameter_count() {
            return Err(MlpError::InvalidShape(format!(
                "expected {} parameters, got {}",
                net.parameter_count(),
                params.len()
            )));
        }
        net.set_parameters(params);
        Ok(net)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("length checked by caller");
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Flat parameters as a single-column CSV of decimal reals.
    pub fn parameters_csv(&self) -> String {
        let mut out = String::from("value\n");
        for p in self.parameters() {
            // Debug formatting of f64 is the shortest exact round-trip form.
            let _ = writeln!(out, "{p:?}");
        }
        out
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, MlpError> {
        self.check_dim(x)?;
        let hidden = self.hidden_activations(x)?;
        let out = self.layers.last().unwrap();
        let mut y = [0.0];
        out.affine(&hidden, &mut y);
        Ok(y[0])
    }

    /// Activations of the last hidden layer, the input to the linear output.
    pub fn hidden_activations(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        self.check_dim(x)?;
        let hidden_layers = &self.layers[..self.layers.len() - 1];
        let mut a = x.to_vec();
        for layer in hidden_layers {
            let mut z = vec![0.0; layer.fan_out];
            layer.affine(&a, &mut z);
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
            a = z;
        }
        Ok(a)
    }

    /// Gradient of `0.5 * mean((y_hat - y)^2)` over `batch`, with the loss
    /// value at the current parameters.
    pub fn gradient<E: Example>(&self, batch: &[E]) -> Result<(Gradient, f64), MlpError> {
        if batch.is_empty() {
            return Err(MlpError::EmptySet);
        }
        let n_layers = self.layers.len();
        let mut grad = Gradient {
            layers: self.layers.iter().map(|l| Layer::zeros(l.fan_in, l.fan_out)).collect(),
        };
        // activations[0] is the input, activations[i] the output of layer i-1.
        let mut activations: Vec<Vec<f64>> = self.layer_dims.iter().map(|&d| vec![0.0; d]).collect();
        let mut deltas: Vec<Vec<f64>> = self.layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        let mut loss = 0.0;

        for ex in batch {
            let x = ex.features();
            self.check_dim(x)?;
            activations[0].copy_from_slice(x);
            for (i, layer) in self.layers.iter().enumerate() {
                let (prev, next) = activations.split_at_mut(i + 1);
                layer.affine(&prev[i], &mut next[0]);
                if i + 1 < n_layers {
                    next[0].iter_mut().for_each(|v| *v = sigmoid(*v));
                }
            }
            let residual = activations[n_layers][0] - ex.target();
            loss += 0.5 * residual * residual;

            deltas[n_layers - 1][0] = residual;
            for i in (0..n_layers).rev() {
                let layer = &self.layers[i];
                let input = &activations[i];
                let g = &mut grad.layers[i];
                for (j, &d) in deltas[i].iter().enumerate() {
                    g.biases[j] += d;
                    let row = &mut g.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                    row.iter_mut().zip(input).for_each(|(gw, a)| *gw += d * a);
                }
                if i > 0 {
                    let (lower, upper) = deltas.split_at_mut(i);
                    let below = &mut lower[i - 1];
                    for (k, b) in below.iter_mut().enumerate() {
                        let back: f64 = (0..layer.fan_out)
                            .map(|j| layer.weights[j * layer.fan_in + k] * upper[0][j])
                            .sum();
                        let a = input[k];
                        *b = back * a * (1.0 - a);
                    }
                }
            }
        }

        let scale = 1.0 / batch.len() as f64;
        for g in &mut grad.layers {
            g.weights
                .iter_mut()
                .chain(g.biases.iter_mut())
                .for_each(|v| *v *= scale);
        }
        Ok((grad, loss * scale))
    }

    /// `0.5 * mean((y_hat - y)^2)`.
    pub fn loss<E: Example>(&self, batch: &[E]) -> Result<f64, MlpError> {
        if batch.is_empty() {
            return Err(MlpError::EmptySet);
        }
        let mut total = 0.0;
        for ex in batch {
            let r = self.forward(ex.features())? - ex.target();
            total += 0.5 * r * r;
        }
        Ok(total / batch.len() as f64)
    }

    fn apply(&mut self, grad: &Gradient, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
            l.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= lr * d);
        }
    }

    /// Full-batch gradient descent. The history holds the training MSE
    /// (`mean((y_hat - y)^2)`) at the start of each epoch.
    pub fn train<E: Example>(mut self, train_set: &[E], cfg: &TrainConfig) -> Result<(Self, Vec<f64>), MlpError> {
        cfg.validate()?;
        if train_set.is_empty() {
            return Err(MlpError::EmptySet);
        }
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            let (grad, half_mse) = self.gradient(train_set)?;
            if !half_mse.is_finite() {
                return Err(MlpError::DivergedTraining { epoch });
            }
            history.push(2.0 * half_mse);
            self.apply(&grad, cfg.learning_rate);
            if !self.is_finite() {
                return Err(MlpError::DivergedTraining { epoch });
            }
        }
        Ok((self, history))
    }

    pub fn evaluate<E: Example>(&self, test_set: &[E]) -> Result<EvalMetrics, MlpError> {
        if test_set.is_empty() {
            return Err(MlpError::EmptySet);
        }
        let mut abs = 0.0;
        let mut sse = 0.0;
        for ex in test_set {
            let r = self.forward(ex.features())? - ex.target();
            abs += r.abs();
            sse += r * r;
        }
        Ok(EvalMetrics {
            mae_pct: abs / test_set.len() as f64 * 100.0,
            sse,
        })
    }
}
