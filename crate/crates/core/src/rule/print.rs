use super::{
    Expression, GlobalConjunction, GlobalStep, LocalConjunction, Predicate, Rule, ValueSet,
};
use crate::sequence::Schema;

/// Render the rule's expression, e.g. `C at t-4` or `B-D in sequence`.
pub fn pretty_print(rule: &Rule, schema: &Schema) -> String {
    match &rule.expression {
        Expression::Constant(b) => b.to_string(),
        Expression::Local(cs) => {
            let wrap = cs.len() > 1;
            cs.iter()
                .map(|c| {
                    let s = local_conjunction(c, schema);
                    if wrap && c.literals.len() > 1 {
                        format!("({s})")
                    } else {
                        s
                    }
                })
                .collect::<Vec<_>>()
                .join(" or ")
        }
        Expression::Global(cs) => {
            let body = cs
                .iter()
                .map(|c| global_conjunction(c, schema))
                .collect::<Vec<_>>()
                .join(" or ");
            format!("{body} in sequence")
        }
    }
}

/// Full rule text: `if <expression> then 1 else 0`.
pub fn rule_text(rule: &Rule, schema: &Schema) -> String {
    format!("if {} then 1 else 0", pretty_print(rule, schema))
}

fn value_set(values: &ValueSet, var: usize, schema: &Schema) -> String {
    let alphabet = schema.alphabet(var);
    let symbols: Vec<String> = values
        .iter()
        .map(|v| alphabet.symbol(*v).to_string())
        .collect();
    if symbols.len() == 1 {
        symbols.into_iter().next().unwrap_or_default()
    } else {
        format!("({})", symbols.join(" or "))
    }
}

fn predicate(p: &Predicate, schema: &Schema) -> String {
    let set = value_set(&p.values, p.variable, schema);
    if schema.vars() > 1 {
        format!("x{}={set}", p.variable + 1)
    } else {
        set
    }
}

fn local_conjunction(c: &LocalConjunction, schema: &Schema) -> String {
    c.literals
        .iter()
        .map(|l| format!("{} at t-{}", predicate(&l.predicate, schema), l.offset))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn global_step(s: &GlobalStep, schema: &Schema) -> String {
    match s.predicates.as_slice() {
        [] => "*".to_string(),
        [p] => predicate(p, schema),
        ps => format!(
            "({})",
            ps.iter()
                .map(|p| predicate(p, schema))
                .collect::<Vec<_>>()
                .join(" and ")
        ),
    }
}

fn global_conjunction(c: &GlobalConjunction, schema: &Schema) -> String {
    c.steps
        .iter()
        .map(|s| global_step(s, schema))
        .collect::<Vec<_>>()
        .join("-")
}
