//! Seeded runs and benchmark grids: dataset preparation, training,
//! test-set evaluation, rule extraction and mean ± std aggregation.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{
    balance_dataset, generate_synthetic, load_peptides, read_dataset, stratified_split, ClassMap,
    Dataset, SplitSpec, SYNTHETIC_MAX_LEN,
};
use crate::error::{Error, Result};
use crate::model::{Mode, ModelConfig};
use crate::rule::{extract_rule, pretty_print, Rule};
use crate::training::{evaluate, fit, initial_model, Metrics, Pruning, TrainConfig, TrainReport};

fn default_n() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    Synthetic {
        ground_truth: u8,
        #[serde(default)]
        balanced: bool,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default)]
        seed: u64,
    },
    /// A `sequence,label` file.
    File { path: PathBuf },
    /// UCI anticancer peptides file with the default class map.
    Peptides { path: PathBuf },
}

impl DatasetSource {
    /// Short name such as `4`, `4b` or `peptides`.
    pub fn name(&self) -> String {
        match self {
            Self::Synthetic {
                ground_truth,
                balanced,
                ..
            } => format!("{ground_truth}{}", if *balanced { "b" } else { "" }),
            Self::File { path } => path.file_stem().map_or_else(
                || path.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            ),
            Self::Peptides { .. } => "peptides".into(),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            Self::Synthetic {
                ground_truth,
                balanced,
                n,
                seed,
            } => {
                let d = generate_synthetic(*ground_truth, *n, *seed)?;
                if *balanced {
                    balance_dataset(&d, *n, *seed)
                } else {
                    Ok(d)
                }
            }
            Self::File { path } => read_dataset(path),
            Self::Peptides { path } => Ok(load_peptides(path, &ClassMap::default(), None)?.dataset),
        }
    }
}

/// Maximum sequence length used for a dataset: 14 for generated data,
/// otherwise the longest sequence present.
pub fn default_max_len(d: &Dataset) -> usize {
    if d.provenance.generator.is_some() {
        SYNTHETIC_MAX_LEN.max(d.max_len())
    } else {
        d.max_len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn new(d: &Dataset, spec: &SplitSpec) -> Result<Self> {
        let (train, val, test) = stratified_split(d, spec)?;
        Ok(Self { train, val, test })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub best_epoch: usize,
    pub val: Metrics,
    pub test: Metrics,
    pub sparsity: f64,
    pub rule: Rule,
    pub rule_text: String,
}

/// Train with `train.seed` (also the initialization seed) and evaluate the
/// selected model on the test split.
pub fn run_seed(
    splits: &Splits,
    model: &ModelConfig,
    train: &TrainConfig,
) -> Result<(RunResult, TrainReport)> {
    let report = fit(
        initial_model(model.clone(), train.seed)?,
        &splits.train,
        &splits.val,
        train,
    )?;
    let binarized = report.model.binarize();
    let test = evaluate(&binarized, &splits.test.encode(model)?, &splits.test.labels)?;
    let rule = extract_rule(&binarized);
    let result = RunResult {
        seed: train.seed,
        best_epoch: report.best_epoch,
        val: report.best_val,
        test,
        sparsity: report.model.sparsity(),
        rule_text: pretty_print(&rule, &model.schema),
        rule,
    };
    Ok((result, report))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(1);
        write!(f, "{:.p$} ± {:.p$}", self.mean, self.std)
    }
}

/// Test-set summary of a group of seeds. Accuracies are in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub runs: usize,
    pub accuracy: MeanStd,
    pub balanced_accuracy: MeanStd,
    pub penalty: MeanStd,
    pub epoch: MeanStd,
}

pub fn summarize(results: &[RunResult]) -> CellSummary {
    let col =
        |f: &dyn Fn(&RunResult) -> f64| MeanStd::of(&results.iter().map(f).collect::<Vec<_>>());
    CellSummary {
        runs: results.len(),
        accuracy: col(&|r| 100.0 * r.test.accuracy),
        balanced_accuracy: col(&|r| 100.0 * r.test.balanced_accuracy),
        penalty: col(&|r| r.test.penalty),
        epoch: col(&|r| r.best_epoch as f64),
    }
}

/// One grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: DatasetSource,
    pub mode: Mode,
    pub window: usize,
    pub pruning: Pruning,
}

impl Cell {
    pub fn label(&self) -> String {
        let pruning = match self.pruning {
            Pruning::None => "none".to_string(),
            Pruning::StartEpoch(e) => format!("from {e}"),
        };
        format!(
            "{} {} w{} pruning {pruning}",
            self.dataset.name(),
            self.mode,
            self.window
        )
    }
}

fn default_seeds() -> usize {
    10
}

/// Cartesian benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default)]
    pub datasets: Vec<DatasetSource>,
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default = "default_pruning")]
    pub pruning: Vec<Pruning>,
    /// Training seeds `0..seeds`.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_pruning() -> Vec<Pruning> {
    vec![Pruning::None]
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let g: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        g.split.validate()?;
        g.train.validate()?;
        Ok(g)
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for dataset in &self.datasets {
            for &mode in &self.modes {
                for &window in &self.windows {
                    for &pruning in &self.pruning {
                        cells.push(Cell {
                            dataset: dataset.clone(),
                            mode,
                            window,
                            pruning,
                        });
                    }
                }
            }
        }
        cells
    }
}
