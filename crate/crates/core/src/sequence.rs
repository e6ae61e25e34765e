use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Ordered symbol set of one categorical variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(invalid("alphabet must not be empty"));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(invalid(format!("duplicate symbol '{c}' in alphabet")));
            }
            if c.is_whitespace() || "()-*=,".contains(*c) {
                return Err(invalid(format!("symbol '{c}' is reserved")));
            }
        }
        Ok(Self { symbols })
    }

    /// The letters `A..=last`.
    pub fn letters(last: char) -> Self {
        Self {
            symbols: ('A'..=last).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: u16) -> char {
        self.symbols[index as usize]
    }

    pub fn index_of(&self, c: char) -> Option<u16> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as u16)
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }
}

/// The categorical variables observed at every time step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub variables: Vec<Alphabet>,
}

impl Schema {
    pub fn single(alphabet: Alphabet) -> Self {
        Self {
            variables: vec![alphabet],
        }
    }

    pub fn vars(&self) -> usize {
        self.variables.len()
    }

    pub fn alphabet(&self, var: usize) -> &Alphabet {
        &self.variables[var]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.variables.iter().map(Alphabet::len).collect()
    }

    /// Sum of alphabet sizes: one-hot width of a time step.
    pub fn onehot_width(&self) -> usize {
        self.variables.iter().map(Alphabet::len).sum()
    }

    pub(crate) fn onehot_offset(&self, var: usize) -> usize {
        self.variables[..var].iter().map(Alphabet::len).sum()
    }
}

/// A categorical sequence; position 0 is the oldest observation.
///
/// Values are alphabet indices, `vars` per time step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sequence {
    vars: usize,
    values: Vec<u16>,
}

impl Sequence {
    /// Single-variable sequence.
    pub fn new(values: Vec<u16>) -> Self {
        Self { vars: 1, values }
    }

    pub fn from_steps(steps: &[Vec<u16>]) -> Result<Self> {
        let vars = steps.first().map_or(1, Vec::len);
        if vars == 0 || steps.iter().any(|s| s.len() != vars) {
            return Err(invalid(
                "every time step needs the same non-zero number of variables",
            ));
        }
        Ok(Self {
            vars,
            values: steps.concat(),
        })
    }

    /// Parse a single-variable sequence written as concatenated symbols.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        text.chars()
            .map(|c| {
                alphabet
                    .index_of(c)
                    .ok_or_else(|| invalid(format!("unknown symbol '{c}' in sequence \"{text}\"")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.vars
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn value(&self, pos: usize, var: usize) -> u16 {
        self.values[pos * self.vars + var]
    }

    pub fn step(&self, pos: usize) -> &[u16] {
        &self.values[pos * self.vars..(pos + 1) * self.vars]
    }

    /// Position of the observation `offset` steps before the last one.
    pub fn position_of_offset(&self, offset: i64) -> Option<usize> {
        let n = self.len() as i64;
        (0..n).contains(&offset).then(|| (n - 1 - offset) as usize)
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        if self.vars != schema.vars() {
            return Err(invalid(format!(
                "sequence has {} variables per step, schema has {}",
                self.vars,
                schema.vars()
            )));
        }
        for pos in 0..self.len() {
            for (var, alphabet) in schema.variables.iter().enumerate() {
                if self.value(pos, var) as usize >= alphabet.len() {
                    return Err(invalid(format!(
                        "symbol index {} outside alphabet of variable {var}",
                        self.value(pos, var)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn render(&self, schema: &Schema) -> String {
        (0..self.len())
            .map(|pos| {
                let step: String = (0..self.vars)
                    .map(|v| schema.alphabet(v).symbol(self.value(pos, v)))
                    .collect();
                step
            })
            .collect::<Vec<_>>()
            .join(if self.vars > 1 { " " } else { "" })
    }

    /// Every single-variable sequence over `alphabet_size` symbols with
    /// length in `1..=max_len`.
    pub fn enumerate_all(alphabet_size: usize, max_len: usize) -> Vec<Sequence> {
        let mut out = Vec::new();
        for len in 1..=max_len {
            let total = alphabet_size.pow(len as u32);
            for mut code in 0..total {
                let mut values = vec![0u16; len];
                for slot in values.iter_mut().rev() {
                    *slot = (code % alphabet_size) as u16;
                    code /= alphabet_size;
                }
                out.push(Sequence::new(values));
            }
        }
        out
    }
}
