use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hard_concrete::HardConcreteParams;

/// Latent parameters of one binary weight matrix plus its prune mask.
///
/// Stored row-major; `rows` is the input dimension, `cols` the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryWeightMatrix {
    rows: usize,
    cols: usize,
    pub loc: Vec<f64>,
    pub mask: Vec<bool>,
}

impl BinaryWeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            loc: vec![0.0; rows * cols],
            mask: vec![true; rows * cols],
        }
    }

    pub fn from_loc(rows: usize, cols: usize, loc: Vec<f64>) -> Result<Self> {
        if loc.len() != rows * cols {
            return Err(invalid(format!(
                "expected {} latent values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                loc.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            mask: vec![true; loc.len()],
            loc,
        })
    }

    /// Glorot/Xavier uniform initialization of the latent values.
    pub fn xavier_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let loc = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        Self {
            rows,
            cols,
            loc,
            mask: vec![true; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.loc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loc.is_empty()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn set_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.loc.len() {
            return Err(invalid("mask shape does not match weight shape"));
        }
        self.mask = mask;
        Ok(())
    }

    /// Evaluation weights: Heaviside of the deterministic weight, masked.
    pub fn binary(&self, params: &HardConcreteParams) -> Vec<f64> {
        self.loc
            .iter()
            .zip(&self.mask)
            .map(|(&l, &m)| if m && params.binarize(l) { 1.0 } else { 0.0 })
            .collect()
    }

    /// Deterministic relaxed weights (median noise), masked.
    pub fn deterministic(&self, params: &HardConcreteParams) -> Vec<f64> {
        self.loc
            .iter()
            .zip(&self.mask)
            .map(|(&l, &m)| if m { params.deterministic(l) } else { 0.0 })
            .collect()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }
}
