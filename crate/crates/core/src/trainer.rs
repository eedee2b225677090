//! Formal (non-spiking) MLP: Xavier initialisation, forward pass,
//! mini-batch SGD with momentum and step learning-rate decay, and accuracy
//! evaluation.
//!
//! Hidden layers use a rectifier, the output layer is linear. Training
//! minimises softmax cross-entropy over the linear outputs; inference only
//! takes the argmax, so the softmax never leaves this module.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{Activation, NetworkTopology, TrainedNetwork};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Epochs between two learning-rate decays.
    pub lr_step_size: usize,
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 0.0005,
            lr_step_size: 1,
            lr_decay: 0.993,
            epochs: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Invalid(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Invalid(format!("momentum must be in [0,1), got {}", self.momentum)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Invalid(format!("lr_decay must be in (0,1], got {}", self.lr_decay)));
        }
        if self.weight_decay < 0.0 || self.batch_size == 0 || self.lr_step_size == 0 {
            return Err(Error::Invalid("weight_decay must be >= 0 and batch/step sizes >= 1".into()));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based): step decay.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let steps = (epoch / self.lr_step_size) as i32;
        self.learning_rate * self.lr_decay.powi(steps)
    }
}

/// Labelled input vectors, stored flat (`len × dims`).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dims: usize,
    classes: usize,
    images: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dims: usize, classes: usize, images: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dims == 0 || images.len() != dims * labels.len() {
            return Err(Error::Shape(format!(
                "{} values cannot hold {} images of dimension {dims}",
                images.len(),
                labels.len()
            )));
        }
        if let Some(pos) = images.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invalid(format!("pixel {} of image {} is outside [0,1]", pos % dims, pos / dims)));
        }
        if let Some(pos) = labels.iter().position(|&l| l >= classes) {
            return Err(Error::Invalid(format!(
                "label {} of sample {pos} is not below the class count {classes}",
                labels[pos]
            )));
        }
        Ok(Self { dims, classes, images, labels })
    }

    pub fn from_rows(classes: usize, rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let dims = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dims) {
            return Err(Error::Shape("rows differ in length".into()));
        }
        Self::new(dims, classes, rows.concat(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * self.dims..(i + 1) * self.dims]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Samples `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            dims: self.dims,
            classes: self.classes,
            images: self.images[range.start * self.dims..range.end * self.dims].to_vec(),
            labels: self.labels[range].to_vec(),
        }
    }

    /// Splits off the last `tail` samples: `(head, tail)`.
    pub fn split_tail(&self, tail: usize) -> (Dataset, Dataset) {
        let cut = self.len().saturating_sub(tail);
        (self.slice(0..cut), self.slice(cut..self.len()))
    }
}

/// Xavier-uniform initialisation: `w ~ U(-a, a)` with
/// `a = sqrt(6 / (N_{l-1} + N_l))`. Thresholds default to `DEFAULT_THRESHOLD`.
pub fn init_xavier(topology: &NetworkTopology, seed: u64) -> TrainedNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = topology
        .layer_sizes()
        .windows(2)
        .map(|w| {
            let bound = xavier_bound(w[0], w[1]);
            (0..w[0] * w[1]).map(|_| rng.random_range(-bound..=bound)).collect()
        })
        .collect();
    TrainedNetwork::with_default_head(topology.clone(), weights).expect("xavier network matches its topology")
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `s = Wᵀ y` for one layer, accumulated row by row in presynaptic order.
fn affine(weights: &[f64], input: &[f64], out: &mut [f64]) {
    let n_out = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, &y) in input.iter().enumerate() {
        if y == 0.0 {
            continue;
        }
        let row = &weights[i * n_out..(i + 1) * n_out];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += w * y;
        }
    }
}

fn activate(act: Activation, values: &mut [f64]) {
    if act == Activation::Rectifier {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
    }
}

/// Outputs `y_1..y_L` of every layer for input `x`.
pub fn forward(net: &TrainedNetwork, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let topo = net.topology();
    if x.len() != topo.inputs() {
        return Err(Error::Dimension { expected: topo.inputs(), actual: x.len() });
    }
    let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(topo.num_layers());
    for l in 1..=topo.num_layers() {
        let input = if l == 1 { x } else { &outputs[l - 2] };
        let mut s = vec![0.0; topo.size(l)];
        affine(net.weights(l), input, &mut s);
        activate(net.activation(l), &mut s);
        outputs.push(s);
    }
    Ok(outputs)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(net: &TrainedNetwork, x: &[f64]) -> Result<usize> {
    let out = forward(net, x)?;
    Ok(argmax(out.last().unwrap()))
}

/// Fraction of samples whose output argmax equals the label.
pub fn evaluate_formal(net: &TrainedNetwork, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for i in 0..data.len() {
        if predict(net, data.image(i))? == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Reusable buffers for forward/backward passes.
struct Scratch {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(topo: &NetworkTopology) -> Self {
        let layers: Vec<Vec<f64>> = topo.layer_sizes()[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self { pre: layers.clone(), post: layers.clone(), delta: layers }
    }
}

/// Accumulates `∂loss/∂W` of one sample into `grads`; returns the loss.
fn accumulate_gradient(
    net: &TrainedNetwork,
    x: &[f64],
    label: usize,
    scratch: &mut Scratch,
    grads: &mut [Vec<f64>],
) -> f64 {
    let topo = net.topology();
    let layers = topo.num_layers();

    for l in 1..=layers {
        let (before, rest) = scratch.post.split_at_mut(l - 1);
        let input: &[f64] = if l == 1 { x } else { &before[l - 2] };
        let pre = &mut scratch.pre[l - 1];
        affine(net.weights(l), input, pre);
        rest[0].copy_from_slice(pre);
        activate(net.activation(l), &mut rest[0]);
    }

    // softmax cross-entropy on the linear output
    let out = &scratch.post[layers - 1];
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = out.iter().map(|v| (v - max).exp()).sum();
    let log_z = max + sum.ln();
    let loss = log_z - out[label];
    for (j, d) in scratch.delta[layers - 1].iter_mut().enumerate() {
        *d = (out[j] - log_z).exp() - if j == label { 1.0 } else { 0.0 };
    }

    for l in (1..=layers).rev() {
        let n_out = topo.size(l);
        let input: &[f64] = if l == 1 { x } else { &scratch.post[l - 2] };
        let delta = &scratch.delta[l - 1];
        let g = &mut grads[l - 1];
        for (i, &y) in input.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            for (gw, &d) in g[i * n_out..(i + 1) * n_out].iter_mut().zip(delta) {
                *gw += y * d;
            }
        }
        if l > 1 {
            let w = net.weights(l);
            let (lower, upper) = scratch.delta.split_at_mut(l - 1);
            let delta = &upper[0];
            let prev = &mut lower[l - 2];
            let prev_pre = &scratch.pre[l - 2];
            let act = net.activation(l - 1);
            for (i, p) in prev.iter_mut().enumerate() {
                let back: f64 = w[i * n_out..(i + 1) * n_out].iter().zip(delta).map(|(w, d)| w * d).sum();
                *p = match act {
                    Activation::Rectifier if prev_pre[i] <= 0.0 => 0.0,
                    _ => back,
                };
            }
        }
    }
    loss
}

/// Loss and weight gradient of a single labelled sample.
pub fn sample_gradient(net: &TrainedNetwork, x: &[f64], label: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    let topo = net.topology();
    if x.len() != topo.inputs() {
        return Err(Error::Dimension { expected: topo.inputs(), actual: x.len() });
    }
    if label >= topo.classes() {
        return Err(Error::Invalid(format!("label {label} out of range")));
    }
    let mut scratch = Scratch::new(topo);
    let mut grads: Vec<Vec<f64>> = net.all_weights().iter().map(|w| vec![0.0; w.len()]).collect();
    let loss = accumulate_gradient(net, x, label, &mut scratch, &mut grads);
    Ok((loss, grads))
}

/// Softmax cross-entropy of one sample.
pub fn sample_loss(net: &TrainedNetwork, x: &[f64], label: usize) -> Result<f64> {
    let out = forward(net, x)?;
    let out = out.last().unwrap();
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + out.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(log_z - out[label])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    pub mean_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub network: TrainedNetwork,
    pub log: Vec<EpochLog>,
}

/// Mini-batch SGD with momentum, L2 weight decay and step LR decay.
///
/// The update per batch is `v ← μ·v + η·(ḡ + λ·w)`, `w ← w − v`, where `ḡ`
/// is the batch-mean gradient. Batch order is drawn from a ChaCha stream
/// seeded with `hp.seed`, so runs are reproducible bit for bit.
pub fn train(
    net: &TrainedNetwork,
    train_set: &Dataset,
    val_set: &Dataset,
    hp: &Hyperparams,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainingOutcome> {
    hp.validate()?;
    let topo = net.topology().clone();
    for ds in [train_set, val_set] {
        if !ds.is_empty() && ds.dims() != topo.inputs() {
            return Err(Error::Dimension { expected: topo.inputs(), actual: ds.dims() });
        }
        if ds.labels().iter().any(|&l| l >= topo.classes()) {
            return Err(Error::Invalid("dataset label exceeds the output layer".into()));
        }
    }

    let mut net = net.clone();
    let mut velocity: Vec<Vec<f64>> = net.all_weights().iter().map(|w| vec![0.0; w.len()]).collect();
    let mut grads = velocity.clone();
    let mut scratch = Scratch::new(&topo);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(hp.epochs);

    for epoch in 0..hp.epochs {
        let lr = hp.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;

        for (batch_idx, batch) in order.chunks(hp.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss +=
                    accumulate_gradient(&net, train_set.image(i), train_set.label(i), &mut scratch, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: batch_idx, loss: batch_loss });
            }
            loss_sum += batch_loss;

            let scale = 1.0 / batch.len() as f64;
            for ((w, v), g) in net.weights_mut().iter_mut().zip(&mut velocity).zip(&grads) {
                for k in 0..w.len() {
                    v[k] = hp.momentum * v[k] + lr * (g[k] * scale + hp.weight_decay * w[k]);
                    w[k] -= v[k];
                }
            }
        }

        let entry = EpochLog {
            epoch,
            learning_rate: lr,
            mean_loss: if train_set.is_empty() { 0.0 } else { loss_sum / train_set.len() as f64 },
            validation_accuracy: evaluate_formal(&net, val_set)?,
        };
        on_epoch(&entry);
        log.push(entry);
    }

    Ok(TrainingOutcome { network: net, log })
}
