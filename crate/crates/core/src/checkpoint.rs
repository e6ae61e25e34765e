//! JSON checkpoints. Latent values round-trip bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Cr2nModel;

const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: u32,
    model: Cr2nModel,
}

pub fn to_json(model: &Cr2nModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Checkpoint {
        format: FORMAT,
        model: model.clone(),
    })?)
}

/// Parse and validate a checkpoint.
pub fn from_json(text: &str) -> Result<Cr2nModel> {
    let c: Checkpoint = serde_json::from_str(text)?;
    if c.format != FORMAT {
        return Err(Error::Config(format!(
            "unsupported checkpoint format {}",
            c.format
        )));
    }
    let m = c.model;
    m.config.validate()?;
    for w in m.stack.iter().chain([&m.and, &m.or, &m.conv]) {
        if w.rows() * w.cols() != w.len() || w.mask.len() != w.len() {
            return Err(Error::Config(
                "checkpoint weight matrix has inconsistent shape".into(),
            ));
        }
    }
    m.deterministic_values().check_shapes(&m.config)?;
    Ok(m)
}

pub fn save_checkpoint(model: &Cr2nModel, path: &Path) -> Result<()> {
    fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Cr2nModel> {
    from_json(&fs::read_to_string(path)?)
}
