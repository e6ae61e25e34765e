//! Direct evaluation of rules on raw sequences.
//!
//! Nothing here touches the network: the interpreter is the reference that
//! extracted rules are checked against, and it labels the synthetic data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::BinarizedModel;
use crate::rule::{Expression, GlobalConjunction, GlobalStep, LocalConjunction, Predicate, Rule};
use crate::sequence::{Schema, Sequence};

/// Evaluate `rule` on `seq` after checking the sequence against `schema`.
pub fn eval_rule(rule: &Rule, seq: &Sequence, schema: &Schema) -> Result<bool> {
    seq.check_schema(schema)?;
    Ok(matches(rule, seq))
}

/// Evaluate without validating the sequence.
pub fn matches(rule: &Rule, seq: &Sequence) -> bool {
    match &rule.expression {
        Expression::Constant(value) => *value,
        Expression::Local(cs) => cs.iter().any(|c| local_matches(c, seq)),
        Expression::Global(cs) => cs.iter().any(|c| global_matches(c, seq)),
    }
}

fn predicate_holds(p: &Predicate, seq: &Sequence, pos: usize) -> bool {
    p.accepts(seq.value(pos, p.variable))
}

fn local_matches(c: &LocalConjunction, seq: &Sequence) -> bool {
    c.literals.iter().all(|lit| {
        seq.position_of_offset(lit.offset as i64)
            .is_some_and(|pos| predicate_holds(&lit.predicate, seq, pos))
    })
}

fn step_holds(step: &GlobalStep, seq: &Sequence, pos: usize) -> bool {
    step.predicates.iter().all(|p| predicate_holds(p, seq, pos))
}

fn global_matches(c: &GlobalConjunction, seq: &Sequence) -> bool {
    let k = c.steps.len();
    if k > seq.len() {
        return false;
    }
    (0..=seq.len() - k).any(|start| {
        c.steps
            .iter()
            .enumerate()
            .all(|(j, step)| step_holds(step, seq, start + j))
    })
}

/// A sequence on which model and rule disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub sequence: Sequence,
    pub model: bool,
    pub rule: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compare the binarized network with `rule` on every sequence.
///
/// Sequences the model cannot encode (too long, wrong schema) are errors;
/// disagreements are reported, not raised.
pub fn equivalence_check(
    model: &BinarizedModel,
    rule: &Rule,
    sequences: &[Sequence],
) -> Result<EquivalenceReport> {
    let outcomes = sequences
        .par_iter()
        .map(|seq| {
            let enc = model.config.encode(seq)?;
            let predicted = model.forward(&enc) >= 0.5;
            let expected = eval_rule(rule, seq, &model.config.schema)?;
            Ok((predicted != expected).then(|| Mismatch {
                sequence: seq.clone(),
                model: predicted,
                rule: expected,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport {
        checked: sequences.len(),
        mismatches: outcomes.into_iter().flatten().collect(),
    })
}
