//! Hard concrete relaxation of binary weights.
//!
//! A latent parameter `loc` is mapped to a stretched, clamped sigmoid sample
//! in `[0, 1]`. The stretch puts finite probability mass on exactly 0 and
//! exactly 1 while keeping a nonzero derivative inside the open interval.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardConcreteParams {
    /// Temperature of the underlying binary concrete.
    pub beta: f64,
    /// Upper stretch bound, > 1.
    pub zeta: f64,
    /// Lower stretch bound, < 0.
    pub gamma: f64,
}

impl Default for HardConcreteParams {
    fn default() -> Self {
        Self {
            beta: 2.0 / 3.0,
            zeta: 1.1,
            gamma: -0.1,
        }
    }
}

/// A relaxed weight value together with its derivative w.r.t. `loc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedSample {
    pub value: f64,
    pub dloc: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl HardConcreteParams {
    pub fn new(beta: f64, zeta: f64, gamma: f64) -> Result<Self> {
        let p = Self { beta, zeta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(invalid(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.gamma < 0.0 && self.zeta > 1.0) {
            return Err(invalid(format!(
                "stretch bounds must satisfy gamma < 0 < 1 < zeta, got gamma={} zeta={}",
                self.gamma, self.zeta
            )));
        }
        Ok(())
    }

    /// Stretch a sigmoid output onto `(gamma, zeta)` and clamp to `[0, 1]`.
    ///
    /// Written as a convex combination of the bounds so that `s = 0.5`
    /// lands on exactly 0.5 for the default parameters.
    fn stretch_clamp(&self, s: f64) -> RelaxedSample {
        let stretched = s * self.zeta + (1.0 - s) * self.gamma;
        if stretched <= 0.0 {
            RelaxedSample {
                value: 0.0,
                dloc: 0.0,
            }
        } else if stretched >= 1.0 {
            RelaxedSample {
                value: 1.0,
                dloc: 0.0,
            }
        } else {
            RelaxedSample {
                value: stretched,
                dloc: s * (1.0 - s) / self.beta * (self.zeta - self.gamma),
            }
        }
    }

    /// Stretched pre-clamp value; used by tooling that needs kink distances.
    pub fn stretched(&self, loc: f64, u: f64) -> f64 {
        let s = sigmoid((logit(u) + loc) / self.beta);
        s * self.zeta + (1.0 - s) * self.gamma
    }

    /// Reparameterized sample for uniform noise `u` in the open unit interval.
    pub fn sample(&self, loc: f64, u: f64) -> Result<RelaxedSample> {
        if !(u > 0.0 && u < 1.0) {
            return Err(invalid(format!("noise must lie in (0,1), got {u}")));
        }
        Ok(self.sample_unchecked(loc, u))
    }

    pub(crate) fn sample_unchecked(&self, loc: f64, u: f64) -> RelaxedSample {
        self.stretch_clamp(sigmoid((logit(u) + loc) / self.beta))
    }

    /// Noise-free weight (median noise `u = 0.5`).
    pub fn deterministic(&self, loc: f64) -> f64 {
        self.stretch_clamp(sigmoid(loc / self.beta)).value
    }

    /// Heaviside binarization of the deterministic weight; threshold is inclusive.
    pub fn binarize(&self, loc: f64) -> bool {
        self.deterministic(loc) >= 0.5
    }
}

fn logit(u: f64) -> f64 {
    u.ln() - (-u).ln_1p()
}
