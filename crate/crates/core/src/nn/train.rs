//! Mini-batch training with Adam, a doubling batch-size schedule and AWGN
//! input regularization.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::{Loss, NetworkModel};
use crate::error::{Error, Result};
use crate::rng::{derive, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub initial_batch: usize,
    pub final_batch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the last epoch (geometric decay). Defaults to
    /// `learning_rate`, i.e. constant.
    pub final_learning_rate: Option<f64>,
    /// Input SNR (dB) of the regularizing noise; `None` trains on clean inputs.
    pub train_snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            initial_batch: 16,
            final_batch: 512,
            epochs: 60,
            learning_rate: 1e-3,
            final_learning_rate: None,
            train_snr_db: Some(10.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let pow2 = |b: usize| b.is_power_of_two();
        if !(pow2(self.initial_batch) && pow2(self.final_batch))
            || self.initial_batch > self.final_batch
        {
            return Err(Error::Config(format!(
                "batch sizes must be powers of two with initial <= final, got {} and {}",
                self.initial_batch, self.final_batch
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        let lr_ok = |lr: f64| lr.is_finite() && lr > 0.0;
        if !lr_ok(self.learning_rate) || !self.final_learning_rate.is_none_or(lr_ok) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }

    /// Batch size used in `epoch` (0-based): doubles at evenly spaced
    /// milestones from `initial_batch` to `final_batch`.
    pub fn batch_size(&self, epoch: usize) -> usize {
        let stages = (self.final_batch / self.initial_batch).trailing_zeros() as usize + 1;
        let stage = (epoch * stages / self.epochs).min(stages - 1);
        self.initial_batch << stage
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.final_learning_rate {
            None => self.learning_rate,
            Some(end) if self.epochs > 1 => {
                let t = epoch as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (end / self.learning_rate).powf(t)
            }
            Some(_) => self.learning_rate,
        }
    }
}

/// Flattened real-valued training pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub inputs: Vec<f64>,
    pub labels: Vec<f64>,
    pub input_len: usize,
    pub label_len: usize,
    /// Input entries that carry signal. Noise is added to, and signal power
    /// measured over, these entries only. `None` means all entries.
    pub signal_mask: Option<Vec<bool>>,
}

impl TrainData {
    pub fn new(inputs: Vec<f64>, labels: Vec<f64>, input_len: usize, label_len: usize) -> Result<Self> {
        if input_len == 0 || label_len == 0 {
            return Err(Error::domain("sample lengths must be positive"));
        }
        if !inputs.len().is_multiple_of(input_len)
            || !labels.len().is_multiple_of(label_len)
            || inputs.len() / input_len != labels.len() / label_len
        {
            return Err(Error::shape(
                "equal sample counts for inputs and labels",
                format!("{} inputs / {} labels", inputs.len(), labels.len()),
            ));
        }
        Ok(TrainData {
            inputs,
            labels,
            input_len,
            label_len,
            signal_mask: None,
        })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.input_len {
            return Err(Error::shape(self.input_len, mask.len()));
        }
        self.signal_mask = Some(mask);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_len
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_len..(i + 1) * self.input_len]
    }

    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i * self.label_len..(i + 1) * self.label_len]
    }
}

/// Adds white Gaussian noise to one real-valued sample so that its
/// per-complex-entry SNR is `snr_db` (power over `2 sigma^2`).
pub fn noisy_input<R: Rng + ?Sized>(
    x: &[f64],
    mask: Option<&[bool]>,
    snr_db: f64,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend_from_slice(x);
    let active = |i: usize| mask.is_none_or(|m| m[i]);
    let (mut energy, mut count) = (0.0, 0usize);
    for (i, v) in x.iter().enumerate() {
        if active(i) {
            energy += v * v;
            count += 1;
        }
    }
    if count == 0 || snr_db == f64::INFINITY {
        return;
    }
    // Per-real-entry mean square equals half the per-complex-entry power, and
    // sigma^2 per real dimension = power / (2 snr).
    let sigma = (energy / count as f64 / 10f64.powf(snr_db / 10.0)).sqrt();
    for (i, v) in out.iter_mut().enumerate() {
        if active(i) {
            let n: f64 = rng.sample(StandardNormal);
            *v += sigma * n;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Mean mini-batch training loss.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: NetworkModel,
    pub history: Vec<EpochRecord>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, model: &mut NetworkModel, grads: &super::Gradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        let step = lr * c2.sqrt() / c1;
        for ((p, g), (m, v)) in model
            .params_with_grads(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= step * *m / (v.sqrt() + Self::EPS);
        }
    }
}

/// Trains `model` on `data` with the NMSE loss. Deterministic in
/// `config.seed`. Fresh input noise is drawn for every presentation of a
/// sample.
pub fn train(model: NetworkModel, data: &TrainData, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_loss(model, data, config, &Loss::nmse())
}

pub fn train_with_loss(
    mut model: NetworkModel,
    data: &TrainData,
    config: &TrainConfig,
    loss: &Loss,
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    if data.input_len != model.input_len() || data.label_len != model.output_len() {
        return Err(Error::shape(
            format!("{} -> {}", model.input_len(), model.output_len()),
            format!("{} -> {}", data.input_len, data.label_len),
        ));
    }
    let n = data.len();
    let mut adam = Adam::new(model.num_params());
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng_from_seed(derive(config.seed, 1));
    let mut noise_rng = rng_from_seed(derive(config.seed, 2));
    let mut history = Vec::with_capacity(config.epochs);
    let mask = data.signal_mask.as_deref();
    let mut xb = Vec::new();
    let mut yb = Vec::new();
    let mut scratch = Vec::new();

    for epoch in 0..config.epochs {
        let batch_size = config.batch_size(epoch).min(n);
        let lr = config.learning_rate_at(epoch);
        let checkpoint = model.clone();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for idx in order.chunks(batch_size) {
            xb.clear();
            yb.clear();
            for &i in idx {
                match config.train_snr_db {
                    Some(snr) => {
                        noisy_input(data.input(i), mask, snr, &mut noise_rng, &mut scratch);
                        xb.extend_from_slice(&scratch);
                    }
                    None => xb.extend_from_slice(data.input(i)),
                }
                yb.extend_from_slice(data.label(i));
            }
            let (l, grads) = model.gradients(&xb, &yb, idx.len(), loss)?;
            if !l.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    message: format!("loss became {l}"),
                    last_good: Box::new(checkpoint),
                });
            }
            adam.update(&mut model, &grads, lr);
            loss_sum += l;
            batches += 1;
        }
        if !model.is_finite() {
            return Err(Error::Diverged {
                epoch,
                message: "non-finite weights".into(),
                last_good: Box::new(checkpoint),
            });
        }
        history.push(EpochRecord {
            epoch,
            batch_size,
            learning_rate: lr,
            loss: loss_sum / batches as f64,
        });
    }
    Ok(TrainOutcome { model, history })
}
