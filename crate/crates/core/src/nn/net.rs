use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::cnn::{self, CnnDims};
use super::layers::cross_entropy;
use super::lstm::{self, LstmDims};
use super::params::ParamSet;
use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, RngStream};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// 1D-CNN hyperparameters. Only the 128-unit dense layer and adam come from
/// the reference architecture; the rest are tunable defaults sized for 10-30
/// features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnSpec {
    pub conv_filters: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    pub dense_units: usize,
    pub output_classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CnnSpec {
    fn default() -> Self {
        CnnSpec {
            conv_filters: 32,
            kernel_size: 3,
            pool_size: 2,
            dense_units: 128,
            output_classes: LabelClass::COUNT,
            epochs: 200,
            batch_size: 16,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

/// LSTM(64) followed by a 3-unit softmax layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmSpec {
    pub hidden_units: usize,
    pub output_classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LstmSpec {
    fn default() -> Self {
        LstmSpec {
            hidden_units: 64,
            output_classes: LabelClass::COUNT,
            epochs: 200,
            batch_size: 16,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Cnn(CnnSpec),
    Lstm(LstmSpec),
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Cnn(_) => "CNN",
            Architecture::Lstm(_) => "RNN-LSTM",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Architecture::Cnn(s) => s.seed,
            Architecture::Lstm(s) => s.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Architecture {
        match self {
            Architecture::Cnn(s) => Architecture::Cnn(CnnSpec { seed, ..s.clone() }),
            Architecture::Lstm(s) => Architecture::Lstm(LstmSpec { seed, ..s.clone() }),
        }
    }

    fn training(&self) -> (usize, usize, f64) {
        match self {
            Architecture::Cnn(s) => (s.epochs, s.batch_size, s.learning_rate),
            Architecture::Lstm(s) => (s.epochs, s.batch_size, s.learning_rate),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (counts, classes, lr): (Vec<(&str, usize)>, usize, f64) = match self {
            Architecture::Cnn(s) => (
                vec![
                    ("conv_filters", s.conv_filters),
                    ("kernel_size", s.kernel_size),
                    ("pool_size", s.pool_size),
                    ("dense_units", s.dense_units),
                    ("batch_size", s.batch_size),
                ],
                s.output_classes,
                s.learning_rate,
            ),
            Architecture::Lstm(s) => (
                vec![
                    ("hidden_units", s.hidden_units),
                    ("batch_size", s.batch_size),
                ],
                s.output_classes,
                s.learning_rate,
            ),
        };
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!(
                "{} {name} must be at least 1",
                self.name()
            )));
        }
        if classes != LabelClass::COUNT {
            return Err(Error::config(format!(
                "output_classes must be {}, got {classes}",
                LabelClass::COUNT
            )));
        }
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::config(format!(
                "learning_rate {lr} must be positive"
            )));
        }
        Ok(())
    }

    fn dims(&self, n_features: usize) -> Result<Dims> {
        Ok(match self {
            Architecture::Cnn(s) => Dims::Cnn(CnnDims::new(s, n_features)?),
            Architecture::Lstm(s) => Dims::Lstm(LstmDims::new(s, n_features)?),
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Dims {
    Cnn(CnnDims),
    Lstm(LstmDims),
}

impl Dims {
    fn init(&self, rng: &mut RngStream) -> ParamSet {
        match self {
            Dims::Cnn(d) => d.init(rng),
            Dims::Lstm(d) => d.init(rng),
        }
    }

    fn input_len(&self) -> usize {
        match self {
            Dims::Cnn(d) => d.input_len(),
            Dims::Lstm(d) => d.input_len(),
        }
    }

    fn probabilities(&self, params: &ParamSet, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Dims::Cnn(d) => cnn::forward(d, params, x)?.probs,
            Dims::Lstm(d) => lstm::forward(d, params, x)?.probs,
        })
    }

    /// Adds `scale * gradient` of the sample's cross-entropy into `grads` and
    /// returns the sample loss.
    fn accumulate(
        &self,
        params: &ParamSet,
        x: &[f64],
        target: usize,
        scale: f64,
        grads: &mut ParamSet,
    ) -> Result<f64> {
        let probs = match self {
            Dims::Cnn(d) => {
                let cache = cnn::forward(d, params, x)?;
                cnn::backward(d, params, x, &cache, target, scale, grads);
                cache.probs
            }
            Dims::Lstm(d) => {
                let cache = lstm::forward(d, params, x)?;
                lstm::backward(d, params, x, &cache, target, scale, grads);
                cache.probs
            }
        };
        cross_entropy(&probs, target)
    }
}

/// A trained (or freshly initialized) network. Immutable once built; safe to
/// share for concurrent prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedNet {
    pub format_version: u32,
    pub architecture: Architecture,
    pub n_features: usize,
    pub class_order: Vec<LabelClass>,
    pub parameters: ParamSet,
    /// Mean training loss per epoch.
    pub training_log: Vec<f64>,
}

impl TrainedNet {
    /// Network with seeded initial weights and an empty training log.
    pub fn initialize(architecture: &Architecture, n_features: usize) -> Result<TrainedNet> {
        architecture.validate()?;
        let dims = architecture.dims(n_features)?;
        let mut rng = RngStream::new(architecture.seed()).derive(0);
        Ok(TrainedNet {
            format_version: MODEL_FORMAT_VERSION,
            architecture: architecture.clone(),
            n_features,
            class_order: LabelClass::ALL.to_vec(),
            parameters: dims.init(&mut rng),
            training_log: Vec::new(),
        })
    }

    fn dims(&self) -> Result<Dims> {
        let dims = self.architecture.dims(self.n_features)?;
        match &dims {
            Dims::Cnn(d) => d.check_layout(&self.parameters)?,
            Dims::Lstm(d) => d.check_layout(&self.parameters)?,
        }
        Ok(dims)
    }

    /// Class probabilities in `[G, F, W]` order for one feature vector.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dims = self.dims()?;
        check_width(dims.input_len(), x.len())?;
        dims.probabilities(&self.parameters, x)
    }
}

fn check_width(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::shape(format!(
            "network expects {expected} features, got {got}"
        )))
    }
}

/// Mean batch cross-entropy and its gradient for every parameter buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub grads: ParamSet,
}

pub fn backprop(net: &TrainedNet, inputs: &Matrix, targets: &[LabelClass]) -> Result<Gradients> {
    let dims = net.dims()?;
    check_batch(&dims, inputs, targets)?;
    let scale = 1.0 / targets.len() as f64;
    let mut grads = net.parameters.zeros_like();
    let mut loss = 0.0;
    for (x, y) in inputs.iter_rows().zip(targets) {
        loss += dims.accumulate(&net.parameters, x, y.index(), scale, &mut grads)?;
    }
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::numeric(name, "non-finite gradient"));
    }
    Ok(Gradients {
        loss: loss * scale,
        grads,
    })
}

/// Mean cross-entropy of the network on a batch (forward only).
pub fn batch_loss(net: &TrainedNet, inputs: &Matrix, targets: &[LabelClass]) -> Result<f64> {
    let dims = net.dims()?;
    check_batch(&dims, inputs, targets)?;
    let mut loss = 0.0;
    for (x, y) in inputs.iter_rows().zip(targets) {
        loss += cross_entropy(&dims.probabilities(&net.parameters, x)?, y.index())?;
    }
    Ok(loss / targets.len() as f64)
}

fn check_batch(dims: &Dims, inputs: &Matrix, targets: &[LabelClass]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::domain("empty batch"));
    }
    if inputs.rows() != targets.len() {
        return Err(Error::shape(format!(
            "{} inputs but {} targets",
            inputs.rows(),
            targets.len()
        )));
    }
    check_width(dims.input_len(), inputs.cols())
}

/// Trains from seeded initial weights with shuffled mini-batches of adam
/// steps for a fixed number of epochs. The CNN reads each row as a 1-channel
/// sequence in feature order; the LSTM reads one feature per timestep.
pub fn train(architecture: &Architecture, train_data: &FeatureMatrix) -> Result<TrainedNet> {
    let present = train_data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::domain(format!(
            "training data has {present} class(es); need at least 2"
        )));
    }
    let mut net = TrainedNet::initialize(architecture, train_data.n_features())?;
    let dims = net.dims()?;
    let (epochs, batch_size, lr) = architecture.training();
    let mut shuffle_rng = RngStream::new(architecture.seed()).derive(1);
    let mut adam = AdamState::new(lr, &net.parameters);

    let x = train_data.features();
    let y = train_data.labels();
    let n = train_data.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = net.parameters.zeros_like();

    for epoch in 0..epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(batch_size) {
            grads.scale(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                epoch_loss += dims
                    .accumulate(&net.parameters, x.row(i), y[i].index(), scale, &mut grads)
                    .map_err(|e| at_epoch(e, epoch))?;
            }
            if let Some(name) = grads.first_non_finite() {
                return Err(Error::numeric(
                    format!("epoch {epoch}, {name}"),
                    "non-finite gradient",
                ));
            }
            adam.step(&mut net.parameters, &grads)?;
        }
        let mean = epoch_loss / n as f64;
        if !mean.is_finite() {
            return Err(Error::numeric(format!("epoch {epoch}"), "non-finite loss"));
        }
        net.training_log.push(mean);
    }
    Ok(net)
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Numeric { context, message } => Error::Numeric {
            context: format!("epoch {epoch}, {context}"),
            message,
        },
        other => other,
    }
}

/// Argmax class per row, ties toward the worse class, plus the `n x 3`
/// probability matrix.
pub fn predict(net: &TrainedNet, data: &Matrix) -> Result<(Vec<LabelClass>, Matrix)> {
    let dims = net.dims()?;
    check_width(dims.input_len(), data.cols())?;
    let mut probs = Matrix::zeros(data.rows(), LabelClass::COUNT);
    let mut classes = Vec::with_capacity(data.rows());
    for (r, x) in data.iter_rows().enumerate() {
        let p = dims.probabilities(&net.parameters, x)?;
        classes.push(LabelClass::ALL[LabelClass::argmax_worse_on_tie(&p, 0.0)]);
        probs.row_mut(r).copy_from_slice(&p);
    }
    Ok((classes, probs))
}

pub fn save_model(net: &TrainedNet, path: &Path) -> Result<()> {
    let text = serde_json::to_string(net)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedNet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let net: TrainedNet = serde_json::from_str(&text)?;
    if net.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::config(format!(
            "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
            net.format_version
        )));
    }
    if net.class_order != LabelClass::ALL {
        return Err(Error::config("model class order must be [G, F, W]"));
    }
    net.dims()?;
    Ok(net)
}
