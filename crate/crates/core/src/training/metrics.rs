use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{BinarizedModel, EncodedSequence};
use crate::penalty::penalty_total;

/// Binary classification counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[bool], labels: &[bool]) -> Self {
        let mut c = Self::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p, l) {
                (true, true) => c.true_positive += 1,
                (false, false) => c.true_negative += 1,
                (true, false) => c.false_positive += 1,
                (false, true) => c.false_negative += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.true_negative + self.false_positive + self.false_negative
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_positive + self.true_negative) as f64 / self.total().max(1) as f64
    }

    /// Mean recall over the classes present.
    pub fn balanced_accuracy(&self) -> f64 {
        let recall =
            |hit: usize, miss: usize| (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64);
        let recalls: Vec<f64> = [
            recall(self.true_positive, self.false_negative),
            recall(self.true_negative, self.false_positive),
        ]
        .into_iter()
        .flatten()
        .collect();
        if recalls.is_empty() {
            0.0
        } else {
            recalls.iter().sum::<f64>() / recalls.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    /// Penalty of the binarized weights.
    pub penalty: f64,
    pub confusion: Confusion,
}

/// Eval-mode metrics of `model` on pre-encoded sequences.
pub fn evaluate(
    model: &BinarizedModel,
    encoded: &[EncodedSequence],
    labels: &[bool],
) -> Result<Metrics> {
    if encoded.len() != labels.len() {
        return Err(invalid("encoded sequences and labels differ in length"));
    }
    let predictions: Vec<bool> = encoded.iter().map(|e| model.forward(e) >= 0.5).collect();
    let confusion = Confusion::from_predictions(&predictions, labels);
    Ok(Metrics {
        accuracy: confusion.accuracy(),
        balanced_accuracy: confusion.balanced_accuracy(),
        penalty: penalty_total(&model.values, model.config.mode),
        confusion,
    })
}
