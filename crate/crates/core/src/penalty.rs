//! Rule-complexity penalty: the (relaxed) number of terminal conditions.

use crate::model::{Cr2nModel, Mode, WeightValues};

/// Per-slot sum of StackedOR weights.
pub fn penalty_stack(values: &WeightValues) -> Vec<f64> {
    values.stack.iter().map(|s| s.iter().sum()).collect()
}

/// Per-conjunction terminal counts `W_and^T Pi_stack`.
pub(crate) fn conjunction_counts(values: &WeightValues, hidden: usize) -> Vec<f64> {
    let stack = penalty_stack(values);
    let mut counts = vec![0.0; hidden];
    for (i, &p) in stack.iter().enumerate() {
        for (c, count) in counts.iter_mut().enumerate() {
            *count += values.and[i * hidden + c] * p;
        }
    }
    counts
}

/// `sum W_or sum W_and Pi_stack`: terminal conditions of the base rule.
pub fn penalty_base(values: &WeightValues) -> f64 {
    let hidden = values.or.len();
    conjunction_counts(values, hidden)
        .iter()
        .zip(&values.or)
        .map(|(c, o)| c * o)
        .sum()
}

/// Local models scale the base penalty by the ConvOR weight mass; global
/// models use the base penalty unchanged.
pub fn penalty_total(values: &WeightValues, mode: Mode) -> f64 {
    let base = penalty_base(values);
    match mode {
        Mode::Local => base * values.conv.iter().sum::<f64>(),
        Mode::Global => base,
    }
}

/// Reported penalty: computed on the binarized weights.
pub fn binarized_penalty(model: &Cr2nModel) -> f64 {
    penalty_total(&model.binarize().values, model.mode())
}
