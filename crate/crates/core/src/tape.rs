//! Train-mode forward pass with a recorded tape and its hand-derived
//! backward pass.
//!
//! Gradients flow through the clamps of every OR/AND unit (zero at and
//! beyond the kink), the hard concrete reparameterization, and the
//! complexity penalty. One noise sample per weight is shared by every window
//! and every sequence of the batch.

use rand::distributions::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{forward_values, Cr2nModel, EncodedSequence, Mode, Trace, WeightValues};
use crate::penalty;
use crate::weights::BinaryWeightMatrix;

/// Uniform noise, one value in (0,1) per weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightNoise {
    pub stack: Vec<Vec<f64>>,
    pub and: Vec<f64>,
    pub or: Vec<f64>,
    pub conv: Vec<f64>,
}

impl WeightNoise {
    pub fn sample<R: Rng + ?Sized>(model: &Cr2nModel, rng: &mut R) -> Self {
        let mut draw = |m: &BinaryWeightMatrix| -> Vec<f64> {
            (0..m.len()).map(|_| rng.sample::<f64, _>(Open01)).collect()
        };
        let stack = model.stack.iter().map(&mut draw).collect();
        let and = draw(&model.and);
        let or = draw(&model.or);
        let conv = match model.mode() {
            Mode::Local => draw(&model.conv),
            Mode::Global => vec![0.5; model.conv.len()],
        };
        Self {
            stack,
            and,
            or,
            conv,
        }
    }

    /// Noise fixed at the median, giving the deterministic relaxation.
    pub fn median(model: &Cr2nModel) -> Self {
        Self {
            stack: model.stack.iter().map(|m| vec![0.5; m.len()]).collect(),
            and: vec![0.5; model.and.len()],
            or: vec![0.5; model.or.len()],
            conv: vec![0.5; model.conv.len()],
        }
    }
}

/// Relaxed weights of one step and their derivatives w.r.t. `loc`.
#[derive(Debug, Clone)]
pub struct SampledWeights {
    pub values: WeightValues,
    pub dloc: WeightValues,
}

impl SampledWeights {
    pub fn new(model: &Cr2nModel, noise: &WeightNoise) -> Result<Self> {
        let p = model.config.hard_concrete;
        let relax = |m: &BinaryWeightMatrix, u: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            if u.len() != m.len() {
                return Err(Error::InvalidArgument("noise shape mismatch".into()));
            }
            let mut vals = Vec::with_capacity(m.len());
            let mut ders = Vec::with_capacity(m.len());
            for ((&loc, &mask), &u) in m.loc.iter().zip(&m.mask).zip(u) {
                if mask {
                    let s = p.sample(loc, u)?;
                    vals.push(s.value);
                    ders.push(s.dloc);
                } else {
                    vals.push(0.0);
                    ders.push(0.0);
                }
            }
            Ok((vals, ders))
        };
        if noise.stack.len() != model.stack.len() {
            return Err(Error::InvalidArgument("noise shape mismatch".into()));
        }
        let mut stack = Vec::new();
        let mut dstack = Vec::new();
        for (m, u) in model.stack.iter().zip(&noise.stack) {
            let (v, d) = relax(m, u)?;
            stack.push(v);
            dstack.push(d);
        }
        let (and, dand) = relax(&model.and, &noise.and)?;
        let (or, dor) = relax(&model.or, &noise.or)?;
        let (conv, dconv) = match model.mode() {
            Mode::Local => relax(&model.conv, &noise.conv)?,
            Mode::Global => (vec![1.0; model.conv.len()], vec![0.0; model.conv.len()]),
        };
        Ok(Self {
            values: WeightValues {
                stack,
                and,
                or,
                conv,
            },
            dloc: WeightValues {
                stack: dstack,
                and: dand,
                or: dor,
                conv: dconv,
            },
        })
    }
}

/// Gradients w.r.t. the latent `loc` of every weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub stack: Vec<Vec<f64>>,
    pub and: Vec<f64>,
    pub or: Vec<f64>,
    /// All zeros in global mode.
    pub conv: Vec<f64>,
}

impl Gradients {
    fn zeros_like(v: &WeightValues) -> Self {
        Self {
            stack: v.stack.iter().map(|s| vec![0.0; s.len()]).collect(),
            and: vec![0.0; v.and.len()],
            or: vec![0.0; v.or.len()],
            conv: vec![0.0; v.conv.len()],
        }
    }

    /// Gradient slices in the order of [`Cr2nModel::trainable`].
    pub fn trainable(&self, mode: Mode) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = self.stack.iter().map(Vec::as_slice).collect();
        v.push(&self.and);
        v.push(&self.or);
        if mode == Mode::Local {
            v.push(&self.conv);
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.stack
            .iter()
            .flatten()
            .chain(&self.and)
            .chain(&self.or)
            .chain(&self.conv)
            .all(|g| g.is_finite())
    }
}

struct Recording {
    weights: SampledWeights,
    mode: Mode,
    hidden: usize,
    inputs: usize,
    onehot_offsets: Vec<usize>,
    window_starts: Vec<usize>,
    slot_parts: Vec<(usize, usize)>,
    batch: Vec<(EncodedSequence, Trace)>,
}

/// Records one train-mode forward pass so it can be differentiated.
#[derive(Default)]
pub struct Tape {
    recording: Option<Recording>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Relaxed forward pass over a batch; returns one prediction per sequence.
    pub fn forward(
        &mut self,
        model: &Cr2nModel,
        batch: &[&EncodedSequence],
        noise: &WeightNoise,
    ) -> Result<Vec<f64>> {
        let weights = SampledWeights::new(model, noise)?;
        let cfg = &model.config;
        let mut recorded = Vec::with_capacity(batch.len());
        let mut ys = Vec::with_capacity(batch.len());
        for enc in batch {
            if enc.slots != cfg.padded_len() || enc.width != cfg.schema.onehot_width() {
                return Err(Error::InvalidArgument(
                    "encoded sequence does not match the model configuration".into(),
                ));
            }
            let mut trace = Trace::default();
            ys.push(forward_values(cfg, &weights.values, enc, Some(&mut trace)));
            recorded.push(((*enc).clone(), trace));
        }
        self.recording = Some(Recording {
            weights,
            mode: cfg.mode,
            hidden: cfg.hidden,
            inputs: cfg.and_inputs(),
            onehot_offsets: (0..cfg.vars())
                .map(|v| cfg.schema.onehot_offset(v))
                .collect(),
            window_starts: (0..cfg.conv_width()).map(|w| cfg.window_start(w)).collect(),
            slot_parts: (0..cfg.and_inputs()).map(|i| cfg.slot_parts(i)).collect(),
            batch: recorded,
        });
        Ok(ys)
    }

    /// Traces of the recorded batch, in batch order.
    pub fn traces(&self) -> Option<Vec<&Trace>> {
        self.recording
            .as_ref()
            .map(|r| r.batch.iter().map(|(_, t)| t).collect())
    }

    /// Relaxed weights used by the recorded pass.
    pub fn weights(&self) -> Option<&SampledWeights> {
        self.recording.as_ref().map(|r| &r.weights)
    }

    /// Penalty of the recorded relaxed weights.
    pub fn penalty(&self) -> Option<f64> {
        self.recording
            .as_ref()
            .map(|r| penalty::penalty_total(&r.weights.values, r.mode))
    }

    /// Back-propagate `dloss_dy` (one entry per recorded sequence) plus
    /// `lambda` times the relaxed penalty. Consumes the recording.
    pub fn backward(&mut self, dloss_dy: &[f64], lambda: f64) -> Result<Gradients> {
        let rec = self.recording.take().ok_or_else(|| {
            Error::State("backward called without a recorded forward pass".into())
        })?;
        if dloss_dy.len() != rec.batch.len() {
            return Err(Error::InvalidArgument(format!(
                "{} upstream gradients for a batch of {}",
                dloss_dy.len(),
                rec.batch.len()
            )));
        }
        let w = &rec.weights.values;
        let hidden = rec.hidden;
        let inputs = rec.inputs;
        let local = rec.mode == Mode::Local;
        let mut g = Gradients::zeros_like(w);
        let mut gx = vec![0.0; inputs];

        for ((enc, t), &gy) in rec.batch.iter().zip(dloss_dy) {
            if gy == 0.0 || t.conv_pre >= 1.0 {
                continue;
            }
            let gz = gy;
            for (win, &start) in rec.window_starts.iter().enumerate() {
                if local {
                    g.conv[win] += gz * t.o[win];
                }
                let go = gz * w.conv[win];
                if go == 0.0 || t.or_pre[win] >= 1.0 {
                    continue;
                }
                let gq = go;
                gx.iter_mut().for_each(|v| *v = 0.0);
                for c in 0..hidden {
                    g.or[c] += gq * t.h[win * hidden + c];
                    let gh = gq * w.or[c];
                    if gh == 0.0 || t.and_pre[win * hidden + c] >= 1.0 {
                        continue;
                    }
                    let ga = -gh;
                    for i in 0..inputs {
                        g.and[i * hidden + c] += ga * (1.0 - t.x[win * inputs + i]);
                        gx[i] -= ga * w.and[i * hidden + c];
                    }
                }
                for (i, &gxi) in gx.iter().enumerate() {
                    if gxi == 0.0 || t.stack_pre[win * inputs + i] >= 1.0 {
                        continue;
                    }
                    let (j, var) = rec.slot_parts[i];
                    let slot = enc.slot(start + j);
                    let seg = &slot[rec.onehot_offsets[var]..];
                    for (gs, &e) in g.stack[i].iter_mut().zip(seg) {
                        *gs += gxi * e;
                    }
                }
            }
        }

        if lambda != 0.0 {
            let stack_pen = penalty::penalty_stack(w);
            let counts = penalty::conjunction_counts(w, hidden);
            let base: f64 = counts.iter().zip(&w.or).map(|(c, o)| c * o).sum();
            let scale = if local {
                w.conv.iter().sum::<f64>()
            } else {
                1.0
            };
            let k = lambda * scale;
            for c in 0..hidden {
                g.or[c] += k * counts[c];
            }
            for i in 0..inputs {
                let mut through = 0.0;
                for c in 0..hidden {
                    g.and[i * hidden + c] += k * w.or[c] * stack_pen[i];
                    through += w.or[c] * w.and[i * hidden + c];
                }
                for gs in g.stack[i].iter_mut() {
                    *gs += k * through;
                }
            }
            if local {
                for gc in g.conv.iter_mut() {
                    *gc += lambda * base;
                }
            }
        }

        let d = &rec.weights.dloc;
        for (gs, ds) in g.stack.iter_mut().zip(&d.stack) {
            gs.iter_mut().zip(ds).for_each(|(a, b)| *a *= b);
        }
        g.and.iter_mut().zip(&d.and).for_each(|(a, b)| *a *= b);
        g.or.iter_mut().zip(&d.or).for_each(|(a, b)| *a *= b);
        if local {
            g.conv.iter_mut().zip(&d.conv).for_each(|(a, b)| *a *= b);
        } else {
            g.conv.iter_mut().for_each(|a| *a = 0.0);
        }
        Ok(g)
    }
}
