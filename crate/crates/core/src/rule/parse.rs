//! Recursive-descent parser for the rule text produced by
//! [`pretty_print`](super::pretty_print) and [`rule_text`](super::rule_text).
//!
//! ```text
//! rule        := "if" expression "then" "1" "else" "0" | expression
//! expression  := "true" | "false" | global | local
//! global      := gconj ("or" gconj)* "in" "sequence"
//! gconj       := step ("-" step)*
//! step        := "*" | predicate | "(" predicate ("and" predicate)* ")" | "(" symbols ")"
//! local       := lconj ("or" lconj)*
//! lconj       := lterm ("and" lterm)*
//! lterm       := predicate "at" "t" ["-" number] | "(" lconj ")"
//! predicate   := ["x" number "="] (symbol | "(" symbol ("or" symbol)* ")")
//! ```
//!
//! The `x<k>=` prefix names the variable (1-based) and is required when the
//! schema has more than one variable.

use super::{
    simplify, Expression, GlobalConjunction, GlobalStep, LocalConjunction, LocalLiteral, Predicate,
    Rule, ValueSet,
};
use crate::error::{Error, Result};
use crate::sequence::Schema;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Dash,
    Star,
    Eq,
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '-' => Some(Tok::Dash),
            '*' => Some(Tok::Star),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Token { tok, pos });
            chars.next();
        } else if c.is_whitespace() {
            chars.next();
        } else {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || "()-*=".contains(c) {
                    break;
                }
                word.push(c);
                chars.next();
            }
            tokens.push(Token {
                tok: Tok::Word(word),
                pos,
            });
        }
    }
    tokens
}

/// Parse rule text and return it in simplified normal form.
///
/// With `max_len`, local offsets at or beyond it are rejected.
pub fn parse_rule(text: &str, schema: &Schema, max_len: Option<usize>) -> Result<Rule> {
    let tokens = lex(text);
    let word = |i: usize, w: &str| matches!(tokens.get(i), Some(Token { tok: Tok::Word(x), .. }) if x == w);
    let (start, end) = if word(0, "if") {
        let n = tokens.len();
        if n < 5
            || !(word(n - 4, "then") && word(n - 3, "1") && word(n - 2, "else") && word(n - 1, "0"))
        {
            return Err(Error::Syntax {
                position: text.len(),
                message: "expected rule to end with 'then 1 else 0'".into(),
            });
        }
        (1, n - 4)
    } else {
        (0, tokens.len())
    };
    let end_pos = tokens.get(end).map_or(text.len(), |t| t.pos);
    let mut p = Parser {
        tokens: &tokens[start..end],
        idx: 0,
        schema,
        max_len,
        end_pos,
    };
    let expression = p.expression()?;
    if p.idx != p.tokens.len() {
        return p.error("unexpected trailing input");
    }
    Ok(simplify(&Rule { expression }, schema))
}

struct Parser<'a> {
    tokens: &'a [Token],
    idx: usize,
    schema: &'a Schema,
    max_len: Option<usize>,
    end_pos: usize,
}

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.end_pos, |t| t.pos)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.pos(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.tokens.get(self.idx).map(|t| &t.tok)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'a Tok> {
        self.tokens.get(self.idx + ahead).map(|t| &t.tok)
    }

    fn peek_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<()> {
        if self.peek_word(w) {
            self.idx += 1;
            Ok(())
        } else {
            self.error(format!("expected '{w}'"))
        }
    }

    fn expression(&mut self) -> Result<Expression> {
        if self.tokens.is_empty() {
            return self.error("empty expression");
        }
        if self.tokens.len() == 1 && (self.peek_word("true") || self.peek_word("false")) {
            let value = self.peek_word("true");
            self.idx += 1;
            return Ok(Expression::Constant(value));
        }
        let n = self.tokens.len();
        let is_global = n >= 2
            && self.tokens[n - 2].tok == Tok::Word("in".into())
            && self.tokens[n - 1].tok == Tok::Word("sequence".into());
        if is_global {
            self.global().map(Expression::Global)
        } else {
            self.local().map(Expression::Local)
        }
    }

    fn global(&mut self) -> Result<Vec<GlobalConjunction>> {
        let mut conjunctions = vec![self.global_conjunction()?];
        while self.peek_word("or") {
            self.idx += 1;
            conjunctions.push(self.global_conjunction()?);
        }
        self.expect_word("in")?;
        self.expect_word("sequence")?;
        Ok(conjunctions)
    }

    fn global_conjunction(&mut self) -> Result<GlobalConjunction> {
        let mut steps = vec![self.global_step()?];
        while self.peek() == Some(&Tok::Dash) {
            self.idx += 1;
            steps.push(self.global_step()?);
        }
        Ok(GlobalConjunction { steps })
    }

    fn global_step(&mut self) -> Result<GlobalStep> {
        match self.peek() {
            Some(Tok::Star) => {
                self.idx += 1;
                Ok(GlobalStep::wildcard())
            }
            Some(Tok::LParen) => {
                let save = self.idx;
                if let Ok(predicate) = self.predicate() {
                    return Ok(GlobalStep::single(predicate));
                }
                self.idx = save + 1;
                let mut predicates = vec![self.predicate()?];
                while self.peek_word("and") {
                    self.idx += 1;
                    predicates.push(self.predicate()?);
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(GlobalStep { predicates })
            }
            _ => Ok(GlobalStep::single(self.predicate()?)),
        }
    }

    fn local(&mut self) -> Result<Vec<LocalConjunction>> {
        let mut conjunctions = vec![LocalConjunction {
            literals: self.local_conjunction()?,
        }];
        while self.peek_word("or") {
            self.idx += 1;
            conjunctions.push(LocalConjunction {
                literals: self.local_conjunction()?,
            });
        }
        Ok(conjunctions)
    }

    fn local_conjunction(&mut self) -> Result<Vec<LocalLiteral>> {
        let mut literals = self.local_term()?;
        while self.peek_word("and") {
            self.idx += 1;
            literals.extend(self.local_term()?);
        }
        Ok(literals)
    }

    fn local_term(&mut self) -> Result<Vec<LocalLiteral>> {
        if self.peek() == Some(&Tok::LParen) {
            let save = self.idx;
            if let Ok(predicate) = self.predicate() {
                if self.peek_word("at") {
                    return Ok(vec![self.anchored(predicate)?]);
                }
            }
            self.idx = save + 1;
            let literals = self.local_conjunction()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(literals);
        }
        let predicate = self.predicate()?;
        Ok(vec![self.anchored(predicate)?])
    }

    fn anchored(&mut self, predicate: Predicate) -> Result<LocalLiteral> {
        self.expect_word("at")?;
        self.expect_word("t")?;
        let offset = if self.peek() == Some(&Tok::Dash) {
            self.idx += 1;
            match self.peek() {
                Some(Tok::Word(w)) if w.chars().all(|c| c.is_ascii_digit()) => {
                    let pos = self.pos();
                    let offset: usize = w.parse().map_err(|_| Error::Syntax {
                        position: pos,
                        message: format!("offset '{w}' out of range"),
                    })?;
                    self.idx += 1;
                    offset
                }
                _ => return self.error("expected an offset after 't-'"),
            }
        } else {
            0
        };
        if let Some(max_len) = self.max_len {
            if offset >= max_len {
                return Err(Error::Range { offset, max_len });
            }
        }
        Ok(LocalLiteral::new(offset, predicate))
    }

    fn at_variable_prefix(&self, ahead: usize) -> bool {
        matches!(self.peek_at(ahead), Some(Tok::Word(w)) if is_variable_name(w))
            && self.peek_at(ahead + 1) == Some(&Tok::Eq)
    }

    fn predicate(&mut self) -> Result<Predicate> {
        let variable = if self.at_variable_prefix(0) {
            let Some(Tok::Word(w)) = self.peek() else {
                unreachable!()
            };
            let k: usize = w[1..].parse().unwrap_or(0);
            if k == 0 || k > self.schema.vars() {
                return self.error(format!("unknown variable '{w}'"));
            }
            self.idx += 2;
            k - 1
        } else {
            if self.schema.vars() > 1 {
                return self.error("variable prefix 'x<k>=' required with several variables");
            }
            0
        };
        let values = self.value_set(variable)?;
        Ok(Predicate { variable, values })
    }

    fn value_set(&mut self, variable: usize) -> Result<ValueSet> {
        let mut values = ValueSet::new();
        if self.peek() == Some(&Tok::LParen) {
            self.idx += 1;
            values.insert(self.symbol(variable)?);
            while self.peek_word("or") {
                self.idx += 1;
                values.insert(self.symbol(variable)?);
            }
            self.expect(Tok::RParen, "')'")?;
        } else {
            values.insert(self.symbol(variable)?);
        }
        Ok(values)
    }

    fn symbol(&mut self, variable: usize) -> Result<u16> {
        let alphabet = self.schema.alphabet(variable);
        match self.peek() {
            Some(Tok::Word(w)) => {
                let mut chars = w.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => match alphabet.index_of(c) {
                        Some(i) => {
                            self.idx += 1;
                            Ok(i)
                        }
                        None => self.error(format!("unknown symbol '{c}'")),
                    },
                    _ => self.error(format!("expected a symbol, found '{w}'")),
                }
            }
            _ => self.error("expected a symbol"),
        }
    }
}

fn is_variable_name(w: &str) -> bool {
    w.len() > 1 && w.starts_with('x') && w[1..].chars().all(|c| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{pretty_print, rule_text};
    use crate::sequence::Alphabet;
    use proptest::prelude::*;

    fn schema() -> Schema {
        Schema::single(Alphabet::letters('F'))
    }

    #[test]
    fn single_local_literal() {
        let r = parse_rule("C at t-4", &schema(), None).unwrap();
        assert_eq!(
            r,
            Rule::local(vec![LocalConjunction {
                literals: vec![LocalLiteral::new(4, Predicate::new(0, [2]))]
            }])
        );
    }

    #[test]
    fn global_adjacent() {
        let r = parse_rule("B-D in sequence", &schema(), None).unwrap();
        assert_eq!(
            r,
            Rule::global(vec![GlobalConjunction {
                steps: vec![
                    GlobalStep::single(Predicate::new(0, [1])),
                    GlobalStep::single(Predicate::new(0, [3]))
                ]
            }])
        );
    }

    #[test]
    fn global_with_wildcard_and_sets() {
        let r = parse_rule("(A or B)-*-(C) in sequence", &schema(), None).unwrap();
        assert_eq!(pretty_print(&r, &schema()), "(A or B)-*-C in sequence");
        let Expression::Global(cs) = &r.expression else {
            panic!("expected global pattern")
        };
        assert!(cs[0].steps[1].is_wildcard());
    }

    #[test]
    fn grouped_local_conjunctions() {
        let text = "(B at t-5 and C at t-3) or (A at t-6 and C at t-4)";
        let r = parse_rule(text, &schema(), Some(14)).unwrap();
        assert_eq!(
            pretty_print(&r, &schema()),
            "(A at t-6 and C at t-4) or (B at t-5 and C at t-3)"
        );
        let wrapped = parse_rule(&rule_text(&r, &schema()), &schema(), None).unwrap();
        assert_eq!(wrapped, r);
    }

    #[test]
    fn value_set_before_at() {
        let r = parse_rule("(A or B) at t-2 and C at t", &schema(), None).unwrap();
        assert_eq!(pretty_print(&r, &schema()), "(A or B) at t-2 and C at t-0");
    }

    #[test]
    fn constants() {
        assert_eq!(
            parse_rule("if false then 1 else 0", &schema(), None).unwrap(),
            Rule::constant(false)
        );
        assert_eq!(
            parse_rule("true", &schema(), None).unwrap(),
            Rule::constant(true)
        );
    }

    #[test]
    fn errors_carry_positions() {
        match parse_rule("C at t-4 and", &schema(), None) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 12),
            other => panic!("unexpected {other:?}"),
        }
        match parse_rule("C at q-4", &schema(), None) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_rule("Z at t-1", &schema(), None),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_rule("if C at t-1 then 1", &schema(), None),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_rule("", &schema(), None),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn offset_range() {
        assert!(matches!(
            parse_rule("C at t-14", &schema(), Some(14)),
            Err(Error::Range {
                offset: 14,
                max_len: 14
            })
        ));
        assert!(parse_rule("C at t-13", &schema(), Some(14)).is_ok());
    }

    #[test]
    fn conjunctive_step_single_variable() {
        let r = parse_rule("(A and (A or B))-C in sequence", &schema(), None).unwrap();
        assert_eq!(pretty_print(&r, &schema()), "A-C in sequence");
    }

    #[test]
    fn multi_variable_round_trip() {
        let s = Schema {
            variables: vec![Alphabet::letters('C'), Alphabet::letters('B')],
        };
        let text = "(x1=(A or C) and x2=B)-*-x2=A in sequence";
        let r = parse_rule(text, &s, None).unwrap();
        assert_eq!(pretty_print(&r, &s), text);
        let local = "x1=A at t-1 and x2=(A or B) at t-0";
        let r = parse_rule(local, &s, None).unwrap();
        assert_eq!(pretty_print(&r, &s), local);
        assert!(parse_rule("A at t-1", &s, None).is_err());
        assert!(parse_rule("x3=A at t-1", &s, None).is_err());
    }

    fn arb_predicate(sizes: Vec<usize>) -> impl Strategy<Value = Predicate> {
        (0..sizes.len()).prop_flat_map(move |var| {
            let n = sizes[var] as u16;
            proptest::collection::btree_set(0..n, 1..=n as usize).prop_map(move |values| {
                Predicate {
                    variable: var,
                    values,
                }
            })
        })
    }

    fn arb_rule(sizes: Vec<usize>) -> impl Strategy<Value = Rule> {
        let lit = (0usize..8, arb_predicate(sizes.clone()))
            .prop_map(|(offset, p)| LocalLiteral::new(offset, p));
        let local = proptest::collection::vec(
            proptest::collection::vec(lit, 1..4).prop_map(|literals| LocalConjunction { literals }),
            1..4,
        )
        .prop_map(Rule::local);
        let step = proptest::collection::vec(arb_predicate(sizes), 0..3)
            .prop_map(|predicates| GlobalStep { predicates });
        let global = proptest::collection::vec(
            proptest::collection::vec(step, 1..5).prop_map(|steps| GlobalConjunction { steps }),
            1..4,
        )
        .prop_map(Rule::global);
        prop_oneof![any::<bool>().prop_map(Rule::constant), local, global]
    }

    proptest! {
        #[test]
        fn parse_inverts_print(rule in arb_rule(vec![4])) {
            let s = Schema::single(Alphabet::letters('D'));
            let expected = simplify(&rule, &s);
            prop_assert_eq!(&parse_rule(&pretty_print(&rule, &s), &s, None).unwrap(), &expected);
            prop_assert_eq!(&parse_rule(&rule_text(&rule, &s), &s, None).unwrap(), &expected);
            prop_assert_eq!(parse_rule(&pretty_print(&expected, &s), &s, None).unwrap(), expected);
        }

        #[test]
        fn parse_inverts_print_two_variables(rule in arb_rule(vec![3, 2])) {
            let s = Schema {
                variables: vec![Alphabet::letters('C'), Alphabet::letters('B')],
            };
            let expected = simplify(&rule, &s);
            prop_assert_eq!(parse_rule(&pretty_print(&rule, &s), &s, None).unwrap(), expected);
        }
    }
}
