//! Minimal dense-network machinery shared by the target models and the
//! shadow attack heads. Everything is plain `f64` with seeded RNG so that a
//! fixed seed reproduces training bit for bit.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confidence floor used when taking logs of predicted probabilities.
pub const CONFIDENCE_FLOOR: f64 = 1e-12;

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the post-activation value.
    fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Output nonlinearity: softmax over k classes with cross-entropy, or a
/// single sigmoid unit with binary cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputKind {
    Softmax,
    Sigmoid,
}

/// Gradient-descent flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One dense layer, weights in row-major `out_dim x in_dim` order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn new_seeded(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let biases = vec![0.0; out_dim];
        Self {
            in_dim,
            out_dim,
            weights,
            biases,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn affine(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut z = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                z += w * x;
            }
            out[o] = z;
        }
    }
}

/// A feed-forward network: zero or more hidden layers plus an output layer.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Network {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub output: OutputKind,
}

/// Reusable per-layer activation buffers.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch {
    /// activations[l] holds the output of layer l (post nonlinearity).
    pub activations: Vec<Vec<f64>>,
}

impl Network {
    /// `dims` = [input, hidden..., output]; output width must be 1 for
    /// sigmoid networks.
    pub fn new_seeded(
        dims: &[usize],
        activation: Activation,
        output: OutputKind,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParameter(
                "network needs at least input and output dimensions".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter("layer widths must be >= 1".into()));
        }
        if output == OutputKind::Sigmoid && dims[dims.len() - 1] != 1 {
            return Err(Error::InvalidParameter(
                "sigmoid output networks have a single output unit".into(),
            ));
        }
        let layers = dims
            .windows(2)
            .map(|w| Layer::new_seeded(w[0], w[1], rng))
            .collect();
        Ok(Self {
            layers,
            activation,
            output,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let w_len = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + w_len]);
            offset += w_len;
            let b_len = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + b_len]);
            offset += b_len;
        }
        Ok(())
    }

    fn ensure_scratch(&self, scratch: &mut Scratch) {
        if scratch.activations.len() != self.layers.len() {
            scratch.activations = self
                .layers
                .iter()
                .map(|l| vec![0.0; l.out_dim])
                .collect();
        }
    }

    /// Forward pass; the returned slice aliases the last scratch buffer and
    /// holds probabilities (softmax vector or a single sigmoid value).
    pub fn forward<'s>(&self, input: &[f64], scratch: &'s mut Scratch) -> &'s [f64] {
        self.ensure_scratch(scratch);
        let n_layers = self.layers.len();
        for l in 0..n_layers {
            // split so the previous activation can be borrowed while writing
            let (before, rest) = scratch.activations.split_at_mut(l);
            let out = &mut rest[0];
            let src: &[f64] = if l == 0 { input } else { &before[l - 1] };
            self.layers[l].affine(src, out);
            if l + 1 < n_layers {
                for a in out.iter_mut() {
                    *a = self.activation.apply(*a);
                }
            } else {
                match self.output {
                    OutputKind::Softmax => softmax_in_place(out),
                    OutputKind::Sigmoid => out[0] = sigmoid(out[0]),
                }
            }
        }
        &scratch.activations[n_layers - 1]
    }

    pub fn forward_probs(&self, input: &[f64]) -> Vec<f64> {
        let mut scratch = Scratch::default();
        self.forward(input, &mut scratch).to_vec()
    }

    /// Apply the output nonlinearity and the layers after the first one to a
    /// precomputed first-layer pre-activation. Used by the masked sibling
    /// evaluator, which patches first-layer sums incrementally.
    pub fn forward_from_first_preactivation<'s>(
        &self,
        z1: &[f64],
        scratch: &'s mut Scratch,
    ) -> &'s [f64] {
        self.ensure_scratch(scratch);
        let n_layers = self.layers.len();
        {
            let out = &mut scratch.activations[0];
            out.copy_from_slice(z1);
            if n_layers > 1 {
                for a in out.iter_mut() {
                    *a = self.activation.apply(*a);
                }
            } else {
                match self.output {
                    OutputKind::Softmax => softmax_in_place(out),
                    OutputKind::Sigmoid => out[0] = sigmoid(out[0]),
                }
            }
        }
        for l in 1..n_layers {
            let (before, rest) = scratch.activations.split_at_mut(l);
            let out = &mut rest[0];
            self.layers[l].affine(&before[l - 1], out);
            if l + 1 < n_layers {
                for a in out.iter_mut() {
                    *a = self.activation.apply(*a);
                }
            } else {
                match self.output {
                    OutputKind::Softmax => softmax_in_place(out),
                    OutputKind::Sigmoid => out[0] = sigmoid(out[0]),
                }
            }
        }
        &scratch.activations[n_layers - 1]
    }

    /// Loss of a predicted probability vector against a class target.
    /// Softmax: cross-entropy of the target class. Sigmoid: binary
    /// cross-entropy with target in {0, 1}. NaN confidences propagate so
    /// divergence stays visible through the clamp.
    pub fn loss(&self, probs: &[f64], target: usize) -> f64 {
        let clamped_neg_ln = |p: f64| {
            if p.is_nan() {
                f64::NAN
            } else {
                -p.max(CONFIDENCE_FLOOR).ln()
            }
        };
        match self.output {
            OutputKind::Softmax => clamped_neg_ln(probs[target]),
            OutputKind::Sigmoid => {
                let p = probs[0];
                if target == 1 {
                    clamped_neg_ln(p)
                } else {
                    clamped_neg_ln(1.0 - p)
                }
            }
        }
    }

    /// Accumulate the gradient of the per-sample loss into `grads`
    /// (flattened in `parameters()` order). Returns the sample loss.
    pub fn accumulate_gradients(
        &self,
        input: &[f64],
        target: usize,
        scratch: &mut Scratch,
        deltas: &mut Vec<Vec<f64>>,
        grads: &mut [f64],
    ) -> f64 {
        let probs = self.forward(input, scratch);
        let loss = self.loss(probs, target);

        let n_layers = self.layers.len();
        if deltas.len() != n_layers {
            *deltas = self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        }

        // output delta: p - y for both softmax/CE and sigmoid/BCE
        {
            let out = &scratch.activations[n_layers - 1];
            let delta = &mut deltas[n_layers - 1];
            match self.output {
                OutputKind::Softmax => {
                    for (j, d) in delta.iter_mut().enumerate() {
                        *d = out[j] - if j == target { 1.0 } else { 0.0 };
                    }
                }
                OutputKind::Sigmoid => {
                    delta[0] = out[0] - target as f64;
                }
            }
        }

        // backpropagate through hidden layers
        for l in (0..n_layers).rev() {
            if l == 0 {
                break;
            }
            let layer = &self.layers[l];
            let (head, tail) = deltas.split_at_mut(l);
            let delta = &tail[0];
            let prev_delta = &mut head[l - 1];
            let prev_act = &scratch.activations[l - 1];
            for i in 0..layer.in_dim {
                let mut s = 0.0;
                for o in 0..layer.out_dim {
                    s += layer.weights[o * layer.in_dim + i] * delta[o];
                }
                prev_delta[i] = s * self.activation.derivative_from_output(prev_act[i]);
            }
        }

        // gradient blocks, in parameters() order
        let mut offset = 0;
        for (l, layer) in self.layers.iter().enumerate() {
            let delta = &deltas[l];
            let src: &[f64] = if l == 0 {
                input
            } else {
                &scratch.activations[l - 1]
            };
            for o in 0..layer.out_dim {
                let g = &mut grads[offset + o * layer.in_dim..offset + (o + 1) * layer.in_dim];
                let d = delta[o];
                for (gi, x) in g.iter_mut().zip(src) {
                    *gi += d * x;
                }
            }
            offset += layer.weights.len();
            for o in 0..layer.out_dim {
                grads[offset + o] += delta[o];
            }
            offset += layer.biases.len();
        }
        loss
    }

    /// Mean-loss gradient over a whole sample set, flattened in
    /// `parameters()` order.
    pub fn mean_gradients(&self, inputs: &[&[f64]], targets: &[usize]) -> Vec<f64> {
        let mut grads = vec![0.0; self.parameter_count()];
        let mut scratch = Scratch::default();
        let mut deltas = Vec::new();
        for (x, &t) in inputs.iter().zip(targets) {
            self.accumulate_gradients(x, t, &mut scratch, &mut deltas, &mut grads);
        }
        let scale = 1.0 / inputs.len() as f64;
        for g in &mut grads {
            *g *= scale;
        }
        grads
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Training hyperparameters for the plain minibatch loop.
#[derive(Debug, Clone)]
pub(crate) struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

/// Minibatch-train `net` in place. Returns the per-epoch mean training loss
/// curve. Fails with the offending epoch if the loss goes non-finite.
pub(crate) fn train_network(
    net: &mut Network,
    inputs: &[&[f64]],
    targets: &[usize],
    params: &TrainParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    debug_assert_eq!(inputs.len(), targets.len());
    if inputs.is_empty() {
        return Err(Error::EmptySet);
    }
    if params.epochs == 0 || params.batch_size == 0 || params.learning_rate <= 0.0 {
        return Err(Error::InvalidParameter(
            "epochs and batch size must be >= 1 and learning rate positive".into(),
        ));
    }
    let n_params = net.parameter_count();
    let mut grads = vec![0.0; n_params];
    let mut params_flat = net.parameters();
    let mut adam = AdamState {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    };
    let mut scratch = Scratch::default();
    let mut deltas = Vec::new();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut curve = Vec::with_capacity(params.epochs);

    for epoch in 0..params.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                epoch_loss +=
                    net.accumulate_gradients(inputs[i], targets[i], &mut scratch, &mut deltas, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            match params.optimizer {
                OptimizerKind::Sgd => {
                    for (w, g) in params_flat.iter_mut().zip(&grads) {
                        *w -= params.learning_rate * g * scale;
                    }
                }
                OptimizerKind::Adam => {
                    adam.t += 1;
                    let bc1 = 1.0 - ADAM_BETA1.powi(adam.t as i32);
                    let bc2 = 1.0 - ADAM_BETA2.powi(adam.t as i32);
                    for j in 0..n_params {
                        let g = grads[j] * scale;
                        adam.m[j] = ADAM_BETA1 * adam.m[j] + (1.0 - ADAM_BETA1) * g;
                        adam.v[j] = ADAM_BETA2 * adam.v[j] + (1.0 - ADAM_BETA2) * g * g;
                        let mhat = adam.m[j] / bc1;
                        let vhat = adam.v[j] / bc2;
                        params_flat[j] -= params.learning_rate * mhat / (vhat.sqrt() + ADAM_EPS);
                    }
                }
            }
            net.set_parameters(&params_flat)?;
        }
        let mean_loss = epoch_loss / inputs.len() as f64;
        if !mean_loss.is_finite() || params_flat.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        curve.push(mean_loss);
    }
    Ok(curve)
}
