//! Target-model training: multilayer perceptrons and multinomial logistic
//! regression with per-class confidence outputs.

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{self, Network, Scratch, TrainParams};
use crate::seed::rng_from_seed;
use crate::space::{FeatureDomain, FeatureVector};

pub use crate::nn::{Activation, OptimizerKind, CONFIDENCE_FLOOR};

/// Hyperparameters for `train_mlp` / `train_logistic`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Hidden layer widths; ignored by logistic regression.
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![128],
            activation: Activation::Tanh,
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden_layers = hidden;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return Err(Error::InvalidParameter("hidden widths must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// A trained classifier exposing per-class confidences.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    domain: FeatureDomain,
    n_classes: usize,
    pub(crate) net: Network,
    train_loss_mean: f64,
    architecture: String,
}

/// Training summary. Test-side fields are filled by
/// [`generalization_error`] once a test split is available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub generalization_error: Option<f64>,
    pub epochs_run: usize,
    pub seed: u64,
}

/// Generalization gap of a model between its train and test splits.
///
/// `accuracy_gap` (train accuracy minus test accuracy, the headline
/// overfitting number) is non-negative for overfit models; `loss_gap`
/// is the raw train-minus-test mean loss difference, which is negative
/// for overfit models under a monotone loss.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeneralizationError {
    pub accuracy_gap: f64,
    pub loss_gap: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_loss: f64,
    pub test_loss: f64,
}

impl TrainedModel {
    pub fn domain(&self) -> FeatureDomain {
        self.domain
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Mean training-set cross-entropy at the end of training. The loss
    /// scorer uses this as its decision threshold.
    pub fn train_loss_mean(&self) -> f64 {
        self.train_loss_mean
    }

    pub fn architecture(&self) -> &str {
        &self.architecture
    }

    /// Per-class confidences for `x`: entries in [0,1] summing to 1.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.domain() != self.domain {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dimension(),
                got: x.len(),
            });
        }
        Ok(self.net.forward_probs(x.values()))
    }

    pub(crate) fn predict_proba_into<'s>(
        &self,
        values: &[f64],
        scratch: &'s mut Scratch,
    ) -> &'s [f64] {
        self.net.forward(values, scratch)
    }

    /// Predicted class: argmax confidence, ties to the lowest class index.
    pub fn classify(&self, x: &FeatureVector) -> Result<usize> {
        let probs = self.predict_proba(x)?;
        Ok(argmax(&probs))
    }

    pub(crate) fn classify_values(&self, values: &[f64], scratch: &mut Scratch) -> usize {
        argmax(self.net.forward(values, scratch))
    }

    /// Accuracy and mean cross-entropy over a dataset.
    pub fn evaluate(&self, data: &LabeledDataset) -> Result<(f64, f64)> {
        if data.is_empty() {
            return Err(Error::EmptySet);
        }
        if data.domain() != self.domain {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dimension(),
                got: data.domain().dimension(),
            });
        }
        let mut scratch = Scratch::default();
        let mut correct = 0usize;
        let mut loss = 0.0;
        for rec in data.iter() {
            let label = rec.label().unwrap();
            if label >= self.n_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    classes: self.n_classes,
                });
            }
            let probs = self.net.forward(rec.values(), &mut scratch);
            if argmax(probs) == label {
                correct += 1;
            }
            loss += -probs[label].max(CONFIDENCE_FLOOR).ln();
        }
        let n = data.len() as f64;
        Ok((correct as f64 / n, loss / n))
    }

    /// Flattened parameters (per layer: row-major weights, then biases).
    pub fn parameters(&self) -> Vec<f64> {
        self.net.parameters()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        self.net.set_parameters(params)
    }

    /// Gradient of the mean cross-entropy over `data` with respect to the
    /// flattened parameters. This is the analytic side of the
    /// finite-difference soundness check.
    pub fn loss_gradients(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::EmptySet);
        }
        let inputs: Vec<&[f64]> = data.iter().map(|r| r.values()).collect();
        let targets: Vec<usize> = data.iter().map(|r| r.label().unwrap()).collect();
        Ok(self.net.mean_gradients(&inputs, &targets))
    }

    /// Mean cross-entropy over `data` for the current parameters.
    pub fn mean_loss(&self, data: &LabeledDataset) -> Result<f64> {
        Ok(self.evaluate(data)?.1)
    }

    /// Build a model from explicit layer shapes and parameters. Mostly for
    /// tests and checkpoint loading.
    pub fn from_parts(
        domain: FeatureDomain,
        n_classes: usize,
        hidden: &[usize],
        activation: Activation,
        params: &[f64],
        train_loss_mean: f64,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidParameter(
                "classifier needs at least 2 classes".into(),
            ));
        }
        let mut dims = vec![domain.dimension()];
        dims.extend_from_slice(hidden);
        dims.push(n_classes);
        let mut rng = rng_from_seed(0);
        let mut net =
            Network::new_seeded(&dims, activation, nn::OutputKind::Softmax, &mut rng)?;
        net.set_parameters(params)?;
        let architecture = describe_architecture(&dims, activation);
        Ok(Self {
            domain,
            n_classes,
            net,
            train_loss_mean,
            architecture,
        })
    }

    pub(crate) fn set_train_loss_mean(&mut self, v: f64) {
        self.train_loss_mean = v;
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn describe_architecture(dims: &[usize], activation: Activation) -> String {
    let act = match activation {
        Activation::Tanh => "tanh",
        Activation::Relu => "relu",
    };
    let widths: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    format!("mlp[{}] {act} softmax", widths.join("-"))
}

fn train_classifier(
    train: &LabeledDataset,
    n_classes: usize,
    hidden: &[usize],
    cfg: &MlpConfig,
) -> Result<(TrainedModel, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySet);
    }
    if n_classes < 2 {
        return Err(Error::InvalidParameter(
            "classification needs at least 2 classes".into(),
        ));
    }
    for rec in train.iter() {
        let label = rec.label().unwrap();
        if label >= n_classes {
            return Err(Error::LabelOutOfRange {
                label,
                classes: n_classes,
            });
        }
    }
    let domain = train.domain();
    let mut dims = vec![domain.dimension()];
    dims.extend_from_slice(hidden);
    dims.push(n_classes);

    let mut rng = rng_from_seed(cfg.seed);
    let mut net = Network::new_seeded(&dims, cfg.activation, nn::OutputKind::Softmax, &mut rng)?;
    let inputs: Vec<&[f64]> = train.iter().map(|r| r.values()).collect();
    let targets: Vec<usize> = train.iter().map(|r| r.label().unwrap()).collect();
    let params = TrainParams {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        optimizer: cfg.optimizer,
    };
    train_network(&mut net, &inputs, &targets, &params, &mut rng)?;

    let architecture = describe_architecture(&dims, cfg.activation);
    let mut model = TrainedModel {
        domain,
        n_classes,
        net,
        train_loss_mean: 0.0,
        architecture,
    };
    let (train_accuracy, train_loss) = model.evaluate(train)?;
    model.train_loss_mean = train_loss;
    let report = TrainReport {
        train_accuracy,
        test_accuracy: None,
        train_loss,
        test_loss: None,
        generalization_error: None,
        epochs_run: cfg.epochs,
        seed: cfg.seed,
    };
    Ok((model, report))
}

// thin wrapper so the nn module stays private
fn train_network(
    net: &mut Network,
    inputs: &[&[f64]],
    targets: &[usize],
    params: &TrainParams,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<f64>> {
    nn::train_network(net, inputs, targets, params, rng)
}

/// Train a multilayer perceptron with softmax output on `train`.
pub fn train_mlp(
    train: &LabeledDataset,
    n_classes: usize,
    cfg: &MlpConfig,
) -> Result<(TrainedModel, TrainReport)> {
    train_classifier(train, n_classes, &cfg.hidden_layers, cfg)
}

/// Train a multinomial logistic regression (no hidden layers, same
/// optimizer loop).
pub fn train_logistic(
    train: &LabeledDataset,
    n_classes: usize,
    cfg: &MlpConfig,
) -> Result<(TrainedModel, TrainReport)> {
    train_classifier(train, n_classes, &[], cfg)
}

/// Per-class confidences of `model` on `x`.
pub fn predict_proba(model: &TrainedModel, x: &FeatureVector) -> Result<Vec<f64>> {
    model.predict_proba(x)
}

/// Cross-entropy of a confidence vector against the true label, with the
/// confidence clamped below at 1e-12.
pub fn cross_entropy_loss(confidences: &[f64], true_label: usize) -> Result<f64> {
    if true_label >= confidences.len() {
        return Err(Error::LabelOutOfRange {
            label: true_label,
            classes: confidences.len(),
        });
    }
    Ok(-confidences[true_label].max(CONFIDENCE_FLOOR).ln())
}

/// Measure the generalization gap of `model` between `train` and `test`.
pub fn generalization_error(
    model: &TrainedModel,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<GeneralizationError> {
    let (train_accuracy, train_loss) = model.evaluate(train)?;
    let (test_accuracy, test_loss) = model.evaluate(test)?;
    Ok(GeneralizationError {
        accuracy_gap: train_accuracy - test_accuracy,
        loss_gap: train_loss - test_loss,
        train_accuracy,
        test_accuracy,
        train_loss,
        test_loss,
    })
}

/// Completes a train report with test-side numbers.
pub fn finish_report(
    report: &mut TrainReport,
    model: &TrainedModel,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<()> {
    let gap = generalization_error(model, train, test)?;
    report.test_accuracy = Some(gap.test_accuracy);
    report.test_loss = Some(gap.test_loss);
    report.generalization_error = Some(gap.accuracy_gap);
    Ok(())
}

/// Evaluates the confidences of every completion of a fixed base vector
/// that varies only at a small set of masked indices.
///
/// The first-layer sums for the known features are computed once; each
/// candidate then only adds the masked columns back in. Downstream layers
/// run normally.
pub struct MaskedPredictor<'m> {
    model: &'m TrainedModel,
    masked: Vec<usize>,
    /// first-layer pre-activation of the base vector with masked slots at 0
    base_z1: Vec<f64>,
    z1: Vec<f64>,
    scratch: Scratch,
}

impl<'m> MaskedPredictor<'m> {
    /// `base_values` must be the full m-length vector with masked slots
    /// zeroed (a portion's known values are exactly that).
    pub fn new(model: &'m TrainedModel, base_values: &[f64], masked: &[usize]) -> Result<Self> {
        let m = model.domain().dimension();
        if base_values.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: base_values.len(),
            });
        }
        let first = &model.net.layers[0];
        let mut base_z1 = first.biases.clone();
        for o in 0..first.out_dim {
            let row = &first.weights[o * first.in_dim..(o + 1) * first.in_dim];
            let mut z = base_z1[o];
            for (w, x) in row.iter().zip(base_values) {
                z += w * x;
            }
            base_z1[o] = z;
        }
        Ok(Self {
            model,
            masked: masked.to_vec(),
            z1: base_z1.clone(),
            base_z1,
            scratch: Scratch::default(),
        })
    }

    /// Confidences for the candidate whose masked features take
    /// `assignment` (aligned with the masked index list).
    pub fn probabilities(&mut self, assignment: &[f64]) -> &[f64] {
        debug_assert_eq!(assignment.len(), self.masked.len());
        let first = &self.model.net.layers[0];
        self.z1.copy_from_slice(&self.base_z1);
        for (slot, &col) in self.masked.iter().enumerate() {
            let a = assignment[slot];
            if a != 0.0 {
                for o in 0..first.out_dim {
                    self.z1[o] += first.weights[o * first.in_dim + col] * a;
                }
            }
        }
        self.model
            .net
            .forward_from_first_preactivation(&self.z1, &mut self.scratch)
    }
}
