use std::collections::BTreeMap;

use super::{
    Expression, GlobalConjunction, GlobalStep, LocalConjunction, LocalLiteral, Predicate, Rule,
};
use crate::sequence::Schema;

/// Normalize a rule without changing its meaning.
///
/// Merges predicates on the same position and variable, drops
/// unsatisfiable and duplicate conjunctions, removes conjunctions absorbed
/// by a weaker one, and writes full-alphabet predicates of global patterns
/// as `*`. Conjunctions and predicates come out in a canonical order.
pub fn simplify(rule: &Rule, schema: &Schema) -> Rule {
    match &rule.expression {
        Expression::Constant(b) => Rule::constant(*b),
        Expression::Local(cs) => simplify_local(cs),
        Expression::Global(cs) => simplify_global(cs, schema),
    }
}

fn merge_predicates<'a, K: Ord>(
    items: impl Iterator<Item = (K, &'a Predicate)>,
) -> Option<BTreeMap<K, Predicate>> {
    let mut merged: BTreeMap<K, Predicate> = BTreeMap::new();
    for (key, p) in items {
        match merged.get_mut(&key) {
            Some(existing) => {
                existing.values = existing.values.intersection(&p.values).copied().collect();
            }
            None => {
                merged.insert(key, p.clone());
            }
        }
    }
    merged
        .values()
        .all(|p| !p.values.is_empty())
        .then_some(merged)
}

fn simplify_local(cs: &[LocalConjunction]) -> Rule {
    let mut out = Vec::new();
    for c in cs {
        let Some(merged) = merge_predicates(
            c.literals
                .iter()
                .map(|l| ((l.offset, l.predicate.variable), &l.predicate)),
        ) else {
            continue;
        };
        let mut literals: Vec<LocalLiteral> = merged
            .into_iter()
            .map(|((offset, _), predicate)| LocalLiteral { offset, predicate })
            .collect();
        if literals.is_empty() {
            return Rule::constant(true);
        }
        literals.sort();
        out.push(LocalConjunction { literals });
    }
    out.sort();
    out.dedup();
    let kept: Vec<LocalConjunction> = out
        .iter()
        .enumerate()
        .filter(|(i, b)| {
            !out.iter()
                .enumerate()
                .any(|(j, a)| j != *i && local_absorbs(a, b))
        })
        .map(|(_, c)| c.clone())
        .collect();
    if kept.is_empty() {
        Rule::constant(false)
    } else {
        Rule::local(kept)
    }
}

/// `a` absorbs `b` when `b` implies `a`: every literal of `a` is matched by a
/// literal of `b` at the same offset and variable with a subset of values.
fn local_absorbs(a: &LocalConjunction, b: &LocalConjunction) -> bool {
    a.literals.iter().all(|la| {
        b.literals.iter().any(|lb| {
            lb.offset == la.offset
                && lb.predicate.variable == la.predicate.variable
                && lb.predicate.values.is_subset(&la.predicate.values)
        })
    })
}

fn simplify_global(cs: &[GlobalConjunction], schema: &Schema) -> Rule {
    let mut out = Vec::new();
    'conj: for c in cs {
        let mut steps = Vec::with_capacity(c.steps.len());
        for step in &c.steps {
            let Some(merged) = merge_predicates(step.predicates.iter().map(|p| (p.variable, p)))
            else {
                continue 'conj;
            };
            let predicates = merged
                .into_values()
                .filter(|p| p.values.len() < schema.alphabet(p.variable).len())
                .collect();
            steps.push(GlobalStep { predicates });
        }
        if steps.is_empty() {
            return Rule::constant(true);
        }
        out.push(GlobalConjunction { steps });
    }
    out.sort();
    out.dedup();
    let kept: Vec<GlobalConjunction> = out
        .iter()
        .enumerate()
        .filter(|(i, b)| {
            !out.iter()
                .enumerate()
                .any(|(j, a)| j != *i && global_absorbs(a, b))
        })
        .map(|(_, c)| c.clone())
        .collect();
    if kept.is_empty() {
        Rule::constant(false)
    } else {
        Rule::global(kept)
    }
}

fn step_implies(strong: &GlobalStep, weak: &GlobalStep) -> bool {
    weak.predicates.iter().all(|pw| {
        strong
            .predicates
            .iter()
            .any(|ps| ps.variable == pw.variable && ps.values.is_subset(&pw.values))
    })
}

/// `a` absorbs `b` when `a` occurs inside `b` at some alignment with every
/// step of `b` at least as strict as the matching step of `a`.
fn global_absorbs(a: &GlobalConjunction, b: &GlobalConjunction) -> bool {
    if a.steps.len() > b.steps.len() {
        return false;
    }
    (0..=b.steps.len() - a.steps.len()).any(|d| {
        a.steps
            .iter()
            .zip(&b.steps[d..])
            .all(|(sa, sb)| step_implies(sb, sa))
    })
}
