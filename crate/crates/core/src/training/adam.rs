use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::weights::BinaryWeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias correction. Masked entries are frozen: neither their
/// latent value nor their moments change.
#[derive(Debug, Clone)]
pub struct Adam {
    params: AdamParams,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: AdamParams, shapes: &[usize]) -> Self {
        Self {
            params,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, weights: Vec<&mut BinaryWeightMatrix>, grads: &[&[f64]]) -> Result<()> {
        if weights.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(invalid("optimizer state does not match the parameters"));
        }
        self.t += 1;
        let AdamParams {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.params;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (k, (w, g)) in weights.into_iter().zip(grads).enumerate() {
            if w.len() != g.len() || w.len() != self.m[k].len() {
                return Err(invalid("gradient shape does not match the parameters"));
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..w.len() {
                if !w.mask[i] {
                    continue;
                }
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                w.loc[i] -= learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
