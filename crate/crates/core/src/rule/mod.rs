//! Rule syntax tree.
//!
//! A rule reads `if <expression> then 1 else 0`, where the expression is a
//! constant, a local pattern (DNF over predicates at absolute offsets from
//! the end of the sequence) or a global pattern (DNF over contiguous step
//! patterns that may occur anywhere in the sequence).

mod extract;
mod parse;
mod print;
mod simplify;

use std::cmp::Reverse;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use extract::{extract_base_dnf, extract_rule, BaseConjunction, BaseDnf, BaseLiteral};
pub use parse::parse_rule;
pub use print::{pretty_print, rule_text};
pub use simplify::simplify;

/// Accepted alphabet indices of one variable.
pub type ValueSet = BTreeSet<u16>;

/// Categorical expression: the variable takes one of `values`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub variable: usize,
    pub values: ValueSet,
}

impl Predicate {
    pub fn new(variable: usize, values: impl IntoIterator<Item = u16>) -> Self {
        Self {
            variable,
            values: values.into_iter().collect(),
        }
    }

    pub fn accepts(&self, value: u16) -> bool {
        self.values.contains(&value)
    }
}

/// Predicate anchored `offset` steps before the last observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalLiteral {
    pub offset: usize,
    pub predicate: Predicate,
}

impl LocalLiteral {
    pub fn new(offset: usize, predicate: Predicate) -> Self {
        Self { offset, predicate }
    }

    fn sort_key(&self) -> (Reverse<usize>, &Predicate) {
        (Reverse(self.offset), &self.predicate)
    }
}

impl PartialOrd for LocalLiteral {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LocalLiteral {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalConjunction {
    pub literals: Vec<LocalLiteral>,
}

/// One time step of a global pattern. No predicates means `*`: any real
/// token, never padding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalStep {
    pub predicates: Vec<Predicate>,
}

impl GlobalStep {
    pub fn wildcard() -> Self {
        Self {
            predicates: Vec::new(),
        }
    }

    pub fn single(predicate: Predicate) -> Self {
        Self {
            predicates: vec![predicate],
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.predicates.is_empty()
    }
}

/// Consecutive steps, oldest first (`B-D` is B followed by D).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalConjunction {
    pub steps: Vec<GlobalStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "conjunctions", rename_all = "lowercase")]
pub enum Expression {
    Constant(bool),
    Local(Vec<LocalConjunction>),
    Global(Vec<GlobalConjunction>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub expression: Expression,
}

impl Rule {
    pub fn constant(value: bool) -> Self {
        Self {
            expression: Expression::Constant(value),
        }
    }

    pub fn local(conjunctions: Vec<LocalConjunction>) -> Self {
        Self {
            expression: Expression::Local(conjunctions),
        }
    }

    pub fn global(conjunctions: Vec<GlobalConjunction>) -> Self {
        Self {
            expression: Expression::Global(conjunctions),
        }
    }

    pub fn is_empty_rule(&self) -> bool {
        self.expression == Expression::Constant(false)
    }

    /// Number of categorical literals at the leaves.
    pub fn leaf_literal_count(&self) -> usize {
        match &self.expression {
            Expression::Constant(_) => 0,
            Expression::Local(cs) => cs
                .iter()
                .flat_map(|c| &c.literals)
                .map(|l| l.predicate.values.len())
                .sum(),
            Expression::Global(cs) => cs
                .iter()
                .flat_map(|c| &c.steps)
                .flat_map(|s| &s.predicates)
                .map(|p| p.values.len())
                .sum(),
        }
    }

    pub fn conjunction_count(&self) -> usize {
        match &self.expression {
            Expression::Constant(_) => 0,
            Expression::Local(cs) => cs.len(),
            Expression::Global(cs) => cs.len(),
        }
    }

    /// Largest number of predicates (local) or steps (global) in a conjunction.
    pub fn max_conjunction_len(&self) -> usize {
        match &self.expression {
            Expression::Constant(_) => 0,
            Expression::Local(cs) => cs.iter().map(|c| c.literals.len()).max().unwrap_or(0),
            Expression::Global(cs) => cs.iter().map(|c| c.steps.len()).max().unwrap_or(0),
        }
    }
}
