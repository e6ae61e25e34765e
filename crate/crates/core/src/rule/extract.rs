use serde::{Deserialize, Serialize};

use super::{
    simplify, GlobalConjunction, GlobalStep, LocalConjunction, LocalLiteral, Predicate, Rule,
    ValueSet,
};
use crate::model::BinarizedModel;

/// A StackedOR slot selected by a conjunction, relative to the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseLiteral {
    /// Window position, 0 = oldest slot.
    pub slot: usize,
    pub variable: usize,
    /// May be empty: the slot then accepts nothing.
    pub values: ValueSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseConjunction {
    pub literals: Vec<BaseLiteral>,
}

impl BaseConjunction {
    pub fn is_satisfiable(&self) -> bool {
        self.literals.iter().all(|l| !l.values.is_empty())
    }
}

/// The filter's DNF exactly as encoded by the weights: one conjunction per
/// AND column selected by the OR layer, no simplification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseDnf {
    pub window: usize,
    pub conjunctions: Vec<BaseConjunction>,
}

impl BaseDnf {
    pub fn literal_count(&self) -> usize {
        self.conjunctions
            .iter()
            .flat_map(|c| &c.literals)
            .map(|l| l.values.len())
            .sum()
    }
}

pub fn extract_base_dnf(model: &BinarizedModel) -> BaseDnf {
    let cfg = &model.config;
    let conjunctions = (0..cfg.hidden)
        .filter(|&c| model.values.or[c] == 1.0)
        .map(|c| BaseConjunction {
            literals: (0..cfg.and_inputs())
                .filter(|&i| model.and_selected(i, c))
                .map(|i| {
                    let (slot, variable) = cfg.slot_parts(i);
                    BaseLiteral {
                        slot,
                        variable,
                        values: model.stack_selected(i).collect(),
                    }
                })
                .collect(),
        })
        .collect();
    BaseDnf {
        window: cfg.window,
        conjunctions,
    }
}

/// Translate a binarized model into its (simplified) rule.
///
/// Local models emit the base DNF once per active ConvOR input, shifted to
/// that window's offsets; conjunctions touching permanent padding (offsets
/// below 0 or at least `max_len`) can never hold and are left out. When
/// every ConvOR input is active the rule is a global pattern.
pub fn extract_rule(model: &BinarizedModel) -> Rule {
    let cfg = &model.config;
    let dnf = extract_base_dnf(model);
    let active: Vec<usize> = (0..cfg.conv_width())
        .filter(|&w| model.values.conv[w] == 1.0)
        .collect();
    if active.is_empty() {
        return Rule::constant(false);
    }
    let satisfiable: Vec<&BaseConjunction> = dnf
        .conjunctions
        .iter()
        .filter(|c| c.is_satisfiable())
        .collect();
    let raw = if active.len() == cfg.conv_width() {
        Rule::global(satisfiable.iter().map(|c| to_global(c)).collect())
    } else {
        let mut conjunctions = Vec::new();
        for &w in &active {
            for c in &satisfiable {
                let shifted: Option<Vec<LocalLiteral>> = c
                    .literals
                    .iter()
                    .map(|l| {
                        let offset = w as i64 - l.slot as i64;
                        (0..cfg.max_len as i64).contains(&offset).then(|| {
                            LocalLiteral::new(
                                offset as usize,
                                Predicate {
                                    variable: l.variable,
                                    values: l.values.clone(),
                                },
                            )
                        })
                    })
                    .collect();
                if let Some(literals) = shifted {
                    conjunctions.push(LocalConjunction { literals });
                }
            }
        }
        Rule::local(conjunctions)
    };
    simplify(&raw, &cfg.schema)
}

fn to_global(c: &BaseConjunction) -> GlobalConjunction {
    let Some(first) = c.literals.iter().map(|l| l.slot).min() else {
        return GlobalConjunction { steps: Vec::new() };
    };
    let last = c.literals.iter().map(|l| l.slot).max().unwrap_or(first);
    let steps = (first..=last)
        .map(|slot| GlobalStep {
            predicates: c
                .literals
                .iter()
                .filter(|l| l.slot == slot)
                .map(|l| Predicate {
                    variable: l.variable,
                    values: l.values.clone(),
                })
                .collect(),
        })
        .collect();
    GlobalConjunction { steps }
}
