//! Labeled sequence datasets: synthetic generators, peptides ingestion,
//! balancing, stratified splits and file I/O.

mod balance;
mod io;
mod peptides;
mod split;
mod synthetic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use balance::balance_dataset;
pub use io::{meta_path, read_dataset, write_dataset};
pub use peptides::{load_peptides, ClassMap, PeptidesLoad};
pub use split::{stratified_split, SplitSpec};
pub use synthetic::{generate_synthetic, ground_truth, synthetic_schema, SYNTHETIC_MAX_LEN};

use crate::error::{invalid, Result};
use crate::model::{EncodedSequence, ModelConfig};
use crate::sequence::{Schema, Sequence};

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced_to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub sequences: Vec<Sequence>,
    pub labels: Vec<bool>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        schema: Schema,
        sequences: Vec<Sequence>,
        labels: Vec<bool>,
        provenance: Provenance,
    ) -> Result<Self> {
        if sequences.len() != labels.len() {
            return Err(invalid(format!(
                "{} sequences but {} labels",
                sequences.len(),
                labels.len()
            )));
        }
        for (i, s) in sequences.iter().enumerate() {
            if s.is_empty() {
                return Err(invalid(format!("sequence {i} is empty")));
            }
            s.check_schema(&schema)?;
        }
        Ok(Self {
            schema,
            sequences,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.positives() as f64 / self.len() as f64
        }
    }

    pub fn max_len(&self) -> usize {
        self.sequences.iter().map(Sequence::len).max().unwrap_or(0)
    }

    /// Items at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Padded one-hot encoding of every sequence.
    pub fn encode(&self, config: &ModelConfig) -> Result<Vec<EncodedSequence>> {
        if config.schema != self.schema {
            return Err(invalid("dataset schema differs from the model schema"));
        }
        self.sequences
            .par_iter()
            .map(|s| config.encode(s))
            .collect()
    }
}
