//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use cr2n::model::{BinarizedModel, Cr2nModel, EncodedSequence, Mode, ModelConfig, WeightValues};
use cr2n::tape::{Tape, WeightNoise};
use cr2n::training::batch_loss;
use cr2n::{Alphabet, Schema, Sequence};
use rand::Rng;

pub fn letters(n: usize) -> Schema {
    Schema::single(Alphabet::letters((b'A' + n as u8 - 1) as char))
}

/// Binary weights, each entry 1 with probability `p`.
pub fn random_binarized<R: Rng>(cfg: &ModelConfig, p: f64, rng: &mut R) -> BinarizedModel {
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 })
            .collect()
    };
    let sizes = cfg.schema.sizes();
    let stack = (0..cfg.and_inputs())
        .map(|i| draw(sizes[cfg.slot_parts(i).1]))
        .collect();
    let and = draw(cfg.and_inputs() * cfg.hidden);
    let or = draw(cfg.hidden);
    let conv = match cfg.mode {
        Mode::Local => draw(cfg.conv_width()),
        Mode::Global => vec![1.0; cfg.conv_width()],
    };
    BinarizedModel::from_values(
        cfg.clone(),
        WeightValues {
            stack,
            and,
            or,
            conv,
        },
    )
    .unwrap()
}

/// Random single-variable model: alphabet <= 4, window <= 3, max_len <= 5.
pub fn random_small_config<R: Rng>(rng: &mut R) -> ModelConfig {
    let alphabet = rng.gen_range(2..=4);
    let window = rng.gen_range(1..=3);
    let max_len = rng.gen_range(window..=5);
    let mode = if rng.gen_bool(0.5) {
        Mode::Local
    } else {
        Mode::Global
    };
    ModelConfig::new(letters(alphabet), window, max_len, mode).unwrap()
}

pub fn random_sequence<R: Rng>(alphabet: usize, len: usize, rng: &mut R) -> Sequence {
    Sequence::new(
        (0..len)
            .map(|_| rng.gen_range(0..alphabet as u16))
            .collect(),
    )
}

/// Latent values in [-0.5, 0.5], with a few masked and a few saturated.
pub fn random_relaxed_model<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Cr2nModel {
    let mut model = Cr2nModel::zeros(cfg.clone()).unwrap();
    for m in model.trainable_mut() {
        for i in 0..m.len() {
            let r: f64 = rng.gen();
            m.loc[i] = if r < 0.05 {
                8.0
            } else if r < 0.1 {
                -8.0
            } else {
                rng.gen_range(-0.5..=0.5)
            };
            m.mask[i] = !rng.gen_bool(0.1);
        }
    }
    model
}

/// Noise in [0.35, 0.65], away from the extremes of the logit.
pub fn moderate_noise<R: Rng>(model: &Cr2nModel, rng: &mut R) -> WeightNoise {
    let mut noise = WeightNoise::median(model);
    let mut fill = |v: &mut Vec<f64>| v.iter_mut().for_each(|u| *u = rng.gen_range(0.35..=0.65));
    noise.stack.iter_mut().for_each(&mut fill);
    fill(&mut noise.and);
    fill(&mut noise.or);
    if model.mode() == Mode::Local {
        fill(&mut noise.conv);
    }
    noise
}

/// Which side of every clamp each unit is on.
fn branch_pattern(model: &Cr2nModel, batch: &[&EncodedSequence], noise: &WeightNoise) -> Vec<u8> {
    let p = model.config.hard_concrete;
    let mut pattern = Vec::new();
    let mut weights = |m: &cr2n::BinaryWeightMatrix, u: &[f64]| {
        for i in 0..m.len() {
            let s = p.stretched(m.loc[i], u[i]);
            pattern.push(if s <= 0.0 {
                0
            } else if s >= 1.0 {
                2
            } else {
                1
            });
        }
    };
    for (m, u) in model.stack.iter().zip(&noise.stack) {
        weights(m, u);
    }
    weights(&model.and, &noise.and);
    weights(&model.or, &noise.or);
    if model.mode() == Mode::Local {
        weights(&model.conv, &noise.conv);
    }
    let mut tape = Tape::new();
    tape.forward(model, batch, noise).unwrap();
    for t in tape.traces().unwrap() {
        let below = |v: &f64| u8::from(*v < 1.0);
        pattern.extend(t.stack_pre.iter().map(below));
        pattern.extend(t.and_pre.iter().map(below));
        pattern.extend(t.or_pre.iter().map(below));
        pattern.push(below(&t.conv_pre));
    }
    pattern
}

#[derive(Debug, Default)]
pub struct GradCheck {
    pub checked: usize,
    /// Checked coordinates with a non-negligible gradient.
    pub nonzero: usize,
    pub excluded: usize,
    pub max_rel_err: f64,
    pub failures: Vec<String>,
}

pub const FD_EPS: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const REL_FLOOR: f64 = 1e-6;

/// Compare the analytic gradient of the relaxed loss with central finite
/// differences, skipping coordinates whose stencil crosses a clamp kink.
pub fn gradient_check(
    model: &Cr2nModel,
    batch: &[&EncodedSequence],
    labels: &[bool],
    noise: &WeightNoise,
    lambda: f64,
) -> GradCheck {
    let mut tape = Tape::new();
    let ys = tape.forward(model, batch, noise).unwrap();
    let n = ys.len() as f64;
    let dloss: Vec<f64> = ys
        .iter()
        .zip(labels)
        .map(|(y, &l)| 2.0 * (y - f64::from(u8::from(l))) / n)
        .collect();
    let grads = tape.backward(&dloss, lambda).unwrap();
    let analytic: Vec<Vec<f64>> = grads
        .trainable(model.mode())
        .iter()
        .map(|g| g.to_vec())
        .collect();

    let mut out = GradCheck::default();
    let count = model.trainable().len();
    for k in 0..count {
        for i in 0..model.trainable()[k].len() {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                m.trainable_mut()[k].loc[i] += delta;
                m
            };
            let (plus, minus) = (shifted(FD_EPS), shifted(-FD_EPS));
            if branch_pattern(&plus, batch, noise) != branch_pattern(&minus, batch, noise) {
                out.excluded += 1;
                continue;
            }
            let fp = batch_loss(&plus, batch, labels, noise, lambda).unwrap();
            let fm = batch_loss(&minus, batch, labels, noise, lambda).unwrap();
            let numeric = (fp - fm) / (2.0 * FD_EPS);
            let a = analytic[k][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            out.checked += 1;
            if numeric.abs() > 1e-8 {
                out.nonzero += 1;
            }
            out.max_rel_err = out.max_rel_err.max(rel);
            if rel > REL_TOL {
                out.failures.push(format!(
                    "matrix {k} entry {i}: analytic {a:e}, numeric {numeric:e}"
                ));
            }
        }
    }
    out
}

/// Random model, batch and noise for a gradient check.
pub fn gradient_case<R: Rng>(
    rng: &mut R,
) -> (Cr2nModel, Vec<EncodedSequence>, Vec<bool>, WeightNoise) {
    let cfg = random_small_config(rng);
    let model = random_relaxed_model(&cfg, rng);
    let alphabet = cfg.schema.alphabet(0).len();
    let batch: Vec<EncodedSequence> = (0..4)
        .map(|_| {
            let len = rng.gen_range(1..=cfg.max_len);
            cfg.encode(&random_sequence(alphabet, len, rng)).unwrap()
        })
        .collect();
    let labels = (0..batch.len()).map(|_| rng.gen_bool(0.5)).collect();
    let noise = moderate_noise(&model, rng);
    (model, batch, labels, noise)
}
