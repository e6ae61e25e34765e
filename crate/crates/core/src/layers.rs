//! Differentiable logic layers.
//!
//! With weights and inputs restricted to {0,1} these compute boolean OR and
//! AND exactly; with values in [0,1] they are piecewise linear relaxations.
//! Clamp kinks get a zero subgradient.

use crate::error::{invalid, Result};

/// Disjunction `min(w . h, 1)`.
pub fn or_forward(w: &[f64], h: &[f64]) -> Result<f64> {
    if w.len() != h.len() {
        return Err(invalid(format!(
            "OR weight length {} does not match input length {}",
            w.len(),
            h.len()
        )));
    }
    Ok(dot(w, h).min(1.0))
}

/// Derivative of `min(z, 1)` w.r.t. `z`.
pub fn clamp_grad(z: f64) -> f64 {
    if z < 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Conjunction through De Morgan: `h = 1 - min(W^T (1 - x), 1)`.
///
/// `w` is `inputs x outputs`, row-major.
pub fn and_forward(w: &[f64], x: &[f64], outputs: usize) -> Result<Vec<f64>> {
    if w.len() != x.len() * outputs {
        return Err(invalid(format!(
            "AND weight has {} entries, expected {}x{}",
            w.len(),
            x.len(),
            outputs
        )));
    }
    let mut acc = vec![0.0; outputs];
    for (i, &xi) in x.iter().enumerate() {
        let neg = 1.0 - xi;
        if neg == 0.0 {
            continue;
        }
        for (a, &wij) in acc.iter_mut().zip(&w[i * outputs..(i + 1) * outputs]) {
            *a += wij * neg;
        }
    }
    Ok(acc.into_iter().map(|a| 1.0 - a.min(1.0)).collect())
}

/// One OR per window slot over that slot's one-hot values.
///
/// `slot_weights[k]` and `x_onehot[k]` belong to slot `k`.
pub fn stacked_or_forward(slot_weights: &[Vec<f64>], x_onehot: &[&[f64]]) -> Result<Vec<f64>> {
    if slot_weights.len() != x_onehot.len() {
        return Err(invalid(format!(
            "{} stacked OR slots but {} input slots",
            slot_weights.len(),
            x_onehot.len()
        )));
    }
    slot_weights
        .iter()
        .zip(x_onehot)
        .map(|(w, x)| {
            if w.len() != x.len() {
                return Err(invalid(format!(
                    "slot width {} does not match alphabet size {}",
                    x.len(),
                    w.len()
                )));
            }
            or_forward(w, x)
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
