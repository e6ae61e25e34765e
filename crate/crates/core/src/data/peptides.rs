use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::sequence::{Alphabet, Schema, Sequence};

/// Maps class labels to binary labels. Labels are compared after
/// lowercasing and removing whitespace, so "mod. active" and "mod.active"
/// are the same class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    labels: BTreeMap<String, bool>,
}

impl Default for ClassMap {
    /// Virtual inactive peptides are the positive class; experimentally
    /// inactive and every active grade are negative.
    fn default() -> Self {
        Self::new(
            ["inactive-virtual"],
            [
                "inactive-exp",
                "mod.active",
                "moderatelyactive",
                "veryactive",
            ],
        )
    }
}

impl ClassMap {
    pub fn new<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut labels = BTreeMap::new();
        labels.extend(negative.into_iter().map(|c| (normalize(c), false)));
        labels.extend(positive.into_iter().map(|c| (normalize(c), true)));
        Self { labels }
    }

    pub fn label(&self, class: &str) -> Option<bool> {
        self.labels.get(&normalize(class)).copied()
    }
}

fn normalize(class: &str) -> String {
    class
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct PeptidesLoad {
    pub dataset: Dataset,
    /// Rows skipped because the sequence exceeded the length limit.
    pub warnings: Vec<String>,
}

/// Read a delimited file with `sequence` and `class` columns (the UCI
/// anticancer peptides layout). The alphabet is the sorted set of symbols
/// seen in the kept rows. Rows longer than `max_len` are skipped with a
/// warning. Row numbers in errors count the header as row 1.
pub fn load_peptides(
    path: &Path,
    class_map: &ClassMap,
    max_len: Option<usize>,
) -> Result<PeptidesLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Ingestion {
                row: 1,
                message: format!("missing column '{name}'"),
            })
    };
    if headers.is_empty() {
        return Err(Error::Ingestion {
            row: 1,
            message: "empty dataset".into(),
        });
    }
    let (seq_col, class_col) = (column("sequence")?, column("class")?);

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::Ingestion {
                row,
                message: "row has too few fields".into(),
            })
        };
        let text = field(seq_col)?;
        let class = field(class_col)?;
        let label = class_map.label(class).ok_or_else(|| Error::Ingestion {
            row,
            message: format!("unknown class label '{class}'"),
        })?;
        if text.is_empty() {
            return Err(Error::Ingestion {
                row,
                message: "empty sequence".into(),
            });
        }
        let len = text.chars().count();
        if max_len.is_some_and(|m| len > m) {
            warnings.push(format!(
                "row {row}: sequence of length {len} exceeds the maximum; skipped"
            ));
            continue;
        }
        rows.push((row, text.to_string(), label));
    }
    if rows.is_empty() {
        return Err(Error::Ingestion {
            row: 1,
            message: "empty dataset".into(),
        });
    }

    let symbols: BTreeSet<char> = rows.iter().flat_map(|(_, t, _)| t.chars()).collect();
    let alphabet = Alphabet::new(symbols).map_err(|e| Error::Ingestion {
        row: 0,
        message: e.to_string(),
    })?;
    let mut sequences = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (row, text, label) in rows {
        let seq = Sequence::parse(&text, &alphabet).map_err(|e| Error::Ingestion {
            row,
            message: e.to_string(),
        })?;
        sequences.push(seq);
        labels.push(label);
    }
    let dataset = Dataset::new(
        Schema::single(alphabet),
        sequences,
        labels,
        Provenance {
            source: path.display().to_string(),
            ..Provenance::default()
        },
    )?;
    Ok(PeptidesLoad { dataset, warnings })
}
