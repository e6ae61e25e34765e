use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance};
use crate::error::{invalid, Error, Result};
use crate::sequence::{Alphabet, Schema, Sequence};

/// Sidecar metadata stored next to a dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    alphabet: String,
    rows: usize,
    positives: usize,
    provenance: Provenance,
}

/// `data.csv` -> `data.csv.meta.toml`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

/// Write `sequence,label` rows plus the metadata sidecar.
pub fn write_dataset(d: &Dataset, path: &Path) -> Result<()> {
    if d.schema.vars() != 1 {
        return Err(invalid("dataset files hold single-variable sequences only"));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sequence", "label"])?;
    for (s, l) in d.sequences.iter().zip(&d.labels) {
        w.write_record([s.render(&d.schema), u8::from(*l).to_string()])?;
    }
    w.flush()?;
    let meta = Meta {
        alphabet: d.schema.alphabet(0).symbols().iter().collect(),
        rows: d.len(),
        positives: d.positives(),
        provenance: d.provenance.clone(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(meta_path(path), text)?;
    Ok(())
}

/// Read a dataset file. Without a sidecar the alphabet is inferred from the
/// symbols present.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let meta: Option<Meta> = match fs::read_to_string(meta_path(path)) {
        Ok(text) => Some(toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let (Some(text), Some(label)) = (record.get(0), record.get(1)) else {
            return Err(Error::Ingestion {
                row,
                message: "expected 'sequence,label'".into(),
            });
        };
        let label = match label.trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Ingestion {
                    row,
                    message: format!("label must be 0 or 1, found '{other}'"),
                })
            }
        };
        rows.push((row, text.trim().to_string(), label));
    }
    let alphabet = match &meta {
        Some(m) => Alphabet::new(m.alphabet.chars())?,
        None => {
            let symbols: std::collections::BTreeSet<char> =
                rows.iter().flat_map(|(_, t, _)| t.chars()).collect();
            Alphabet::new(symbols)?
        }
    };
    let mut sequences = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (row, text, label) in rows {
        if text.is_empty() {
            return Err(Error::Ingestion {
                row,
                message: "empty sequence".into(),
            });
        }
        sequences.push(
            Sequence::parse(&text, &alphabet).map_err(|e| Error::Ingestion {
                row,
                message: e.to_string(),
            })?,
        );
        labels.push(label);
    }
    let provenance = meta.map(|m| m.provenance).unwrap_or_else(|| Provenance {
        source: path.display().to_string(),
        ..Provenance::default()
    });
    Dataset::new(Schema::single(alphabet), sequences, labels, provenance)
}
