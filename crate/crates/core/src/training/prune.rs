use crate::model::Cr2nModel;
use crate::weights::BinaryWeightMatrix;

/// Cubic prune-rate schedule `r_f - r_f (1 - s/s_f)^3`, held at `r_f` once
/// `s >= s_f`.
pub fn prune_rate(s: usize, s_f: usize, r_f: f64) -> f64 {
    if s >= s_f {
        return r_f;
    }
    let left = 1.0 - s as f64 / s_f as f64;
    r_f - r_f * left.powi(3)
}

/// Recompute the mask: keep entries with `|loc| >= rate * max(loc)`.
/// A matrix whose largest latent value is not positive is left unmasked.
pub fn prune_matrix(m: &mut BinaryWeightMatrix, rate: f64) {
    let max = m.loc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 || m.is_empty() {
        m.mask.iter_mut().for_each(|k| *k = true);
        return;
    }
    let threshold = rate * max;
    for (k, l) in m.mask.iter_mut().zip(&m.loc) {
        *k = l.abs() >= threshold;
    }
}

/// Re-derive the mask of every trainable matrix at schedule position `s`.
pub fn prune_step(model: &mut Cr2nModel, s: usize, s_f: usize, r_f: f64) -> f64 {
    let rate = prune_rate(s, s_f, r_f);
    for m in model.trainable_mut() {
        prune_matrix(m, rate);
    }
    rate
}
