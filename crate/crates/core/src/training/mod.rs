//! Minibatch training: relaxed MSE plus complexity penalty, Adam, dynamic
//! magnitude pruning and model selection on validation accuracy.

mod adam;
mod metrics;
mod prune;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamParams};
pub use metrics::{evaluate, Confusion, Metrics};
pub use prune::{prune_matrix, prune_rate, prune_step};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::model::{Cr2nModel, EncodedSequence, ModelConfig};
use crate::tape::{Tape, WeightNoise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pruning {
    None,
    /// Prune from the start of this (0-based) epoch to the end of training.
    StartEpoch(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub adam: AdamParams,
    pub epochs: usize,
    pub batch_size: usize,
    pub pruning: Pruning,
    /// Iterations between mask updates.
    pub prune_period: usize,
    pub final_prune_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            adam: AdamParams::default(),
            epochs: 200,
            batch_size: 100,
            pruning: Pruning::None,
            prune_period: 16,
            final_prune_rate: 0.99,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be a non-negative number");
        }
        if !(self.adam.learning_rate.is_finite() && self.adam.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return bad("Adam decay rates must lie in [0, 1)");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.prune_period == 0 {
            return bad("epochs, batch size and prune period must be at least 1");
        }
        if !(0.0..1.0).contains(&self.final_prune_rate) {
            return bad("final prune rate must lie in [0, 1)");
        }
        if let Pruning::StartEpoch(e) = self.pruning {
            if e >= self.epochs {
                return bad("pruning must start before the last epoch");
            }
        }
        Ok(())
    }
}

/// Mean squared error plus `lambda * penalty`.
pub fn loss(predictions: &[f64], labels: &[bool], penalty: f64, lambda: f64) -> f64 {
    mse(predictions, labels) + lambda * penalty
}

fn mse(predictions: &[f64], labels: &[bool]) -> f64 {
    let n = predictions.len().max(1) as f64;
    predictions
        .iter()
        .zip(labels)
        .map(|(y, &l)| (y - f64::from(u8::from(l))).powi(2))
        .sum::<f64>()
        / n
}

/// Relaxed loss of a batch under fixed noise.
pub fn batch_loss(
    model: &Cr2nModel,
    batch: &[&EncodedSequence],
    labels: &[bool],
    noise: &WeightNoise,
    lambda: f64,
) -> Result<f64> {
    let mut tape = Tape::new();
    let ys = tape.forward(model, batch, noise)?;
    let penalty = tape.penalty().unwrap_or(0.0);
    Ok(loss(&ys, labels, penalty, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    pub mse: f64,
    /// Penalty of the sampled relaxed weights.
    pub penalty: f64,
}

/// One optimizer step on a batch; the loss is measured before the update.
pub fn train_step(
    model: &mut Cr2nModel,
    adam: &mut Adam,
    batch: &[&EncodedSequence],
    labels: &[bool],
    noise: &WeightNoise,
    lambda: f64,
) -> Result<StepOutcome> {
    if batch.is_empty() || batch.len() != labels.len() {
        return Err(invalid("a training batch needs one label per sequence"));
    }
    let mut tape = Tape::new();
    let ys = tape.forward(model, batch, noise)?;
    let penalty = tape.penalty().unwrap_or(0.0);
    let mse = mse(&ys, labels);
    let n = ys.len() as f64;
    let dloss: Vec<f64> = ys
        .iter()
        .zip(labels)
        .map(|(y, &l)| 2.0 * (y - f64::from(u8::from(l))) / n)
        .collect();
    let grads = tape.backward(&dloss, lambda)?;
    let outcome = StepOutcome {
        loss: mse + lambda * penalty,
        mse,
        penalty,
    };
    if !outcome.loss.is_finite() || !grads.is_finite() {
        return Err(Error::Training {
            epoch: 0,
            iteration: 0,
            message: format!("non-finite loss or gradient (mse {mse}, penalty {penalty})"),
        });
    }
    let mode = model.mode();
    adam.step(model.trainable_mut(), &grads.trainable(mode))?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_mse: f64,
    /// Mean relaxed penalty over the epoch's batches.
    pub train_penalty: f64,
    pub val_accuracy: f64,
    pub val_balanced_accuracy: f64,
    /// Penalty of the binarized weights at the end of the epoch.
    pub penalty: f64,
    pub sparsity: f64,
    pub prune_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val: Metrics,
    /// Model state at the end of the selected epoch.
    pub model: Cr2nModel,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ReportLine<'a> {
    Epoch(&'a EpochRecord),
    Summary {
        best_epoch: usize,
        val_accuracy: f64,
        val_balanced_accuracy: f64,
        penalty: f64,
        sparsity: f64,
    },
}

impl TrainReport {
    /// One JSON record per epoch followed by a summary record.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(&ReportLine::Epoch(e))?);
            out.push('\n');
        }
        let summary = ReportLine::Summary {
            best_epoch: self.best_epoch,
            val_accuracy: self.best_val.accuracy,
            val_balanced_accuracy: self.best_val.balanced_accuracy,
            penalty: self.best_val.penalty,
            sparsity: self.model.sparsity(),
        };
        out.push_str(&serde_json::to_string(&summary)?);
        out.push('\n');
        Ok(out)
    }
}

/// Xavier-initialized model for `seed`.
pub fn initial_model(config: ModelConfig, seed: u64) -> Result<Cr2nModel> {
    Cr2nModel::new(config, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Train `model` and return the epoch with the best validation accuracy,
/// ties going to the lower binarized penalty, then to the earlier epoch.
pub fn fit(
    mut model: Cr2nModel,
    train: &Dataset,
    val: &Dataset,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(invalid("training and validation sets must not be empty"));
    }
    let train_enc = train.encode(&model.config)?;
    let val_enc = val.encode(&model.config)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let shapes: Vec<usize> = model.trainable().iter().map(|m| m.len()).collect();
    let mut adam = Adam::new(config.adam, &shapes);

    let batches_per_epoch = train.len().div_ceil(config.batch_size);
    let prune_window = match config.pruning {
        Pruning::None => None,
        Pruning::StartEpoch(e) => Some((
            e * batches_per_epoch,
            (config.epochs - e) * batches_per_epoch,
        )),
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    let mut best: Option<(Metrics, usize, Cr2nModel)> = None;
    let mut iteration = 0;
    let mut rate = 0.0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut mse_sum, mut pen_sum) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&EncodedSequence> = chunk.iter().map(|&i| &train_enc[i]).collect();
            let labels: Vec<bool> = chunk.iter().map(|&i| train.labels[i]).collect();
            let noise = WeightNoise::sample(&model, &mut rng);
            let step = train_step(
                &mut model,
                &mut adam,
                &batch,
                &labels,
                &noise,
                config.lambda,
            )
            .map_err(|e| match e {
                Error::Training { message, .. } => Error::Training {
                    epoch,
                    iteration,
                    message,
                },
                other => other,
            })?;
            loss_sum += step.loss;
            mse_sum += step.mse;
            pen_sum += step.penalty;
            iteration += 1;
            if let Some((start, horizon)) = prune_window {
                if iteration > start {
                    let s = iteration - start;
                    if s % config.prune_period == 0 {
                        rate = prune_step(&mut model, s, horizon, config.final_prune_rate);
                    }
                }
            }
        }
        let binarized = model.binarize();
        let metrics = evaluate(&binarized, &val_enc, &val.labels)?;
        let n = batches_per_epoch as f64;
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            train_mse: mse_sum / n,
            train_penalty: pen_sum / n,
            val_accuracy: metrics.accuracy,
            val_balanced_accuracy: metrics.balanced_accuracy,
            penalty: metrics.penalty,
            sparsity: model.sparsity(),
            prune_rate: rate,
        });
        let better = match &best {
            None => true,
            Some((b, _, _)) => {
                metrics.accuracy > b.accuracy
                    || (metrics.accuracy == b.accuracy && metrics.penalty < b.penalty)
            }
        };
        if better {
            best = Some((metrics, epoch, model.clone()));
        }
    }
    let (best_val, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainReport {
        epochs: records,
        best_epoch,
        best_val,
        model,
    })
}
