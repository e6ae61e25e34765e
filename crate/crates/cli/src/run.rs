//! Single training runs and their on-disk layout.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use cr2n::checkpoint::save_checkpoint;
use cr2n::data::{Dataset, SplitSpec};
use cr2n::experiment::{default_max_len, run_seed, DatasetSource, Splits};
use cr2n::rule::rule_text;
use cr2n::training::{Pruning, TrainConfig};
use cr2n::{Mode, ModelConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{parse_mode, parse_pruning};

#[derive(Args)]
pub struct DatasetArgs {
    /// `sequence,label` CSV, or the peptides file with `--peptides`.
    pub path: PathBuf,
    /// Read `path` as the UCI anticancer peptides CSV.
    #[arg(long)]
    pub peptides: bool,
}

impl DatasetArgs {
    pub fn source(&self) -> DatasetSource {
        let path = self.path.clone();
        if self.peptides {
            DatasetSource::Peptides { path }
        } else {
            DatasetSource::File { path }
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        self.source()
            .load()
            .with_context(|| format!("loading {}", self.path.display()))
    }
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, value_parser = parse_mode, default_value = "local")]
    mode: Mode,
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// `none` or the epoch at which pruning starts.
    #[arg(long, value_parser = parse_pruning)]
    pruning: Option<Pruning>,
    /// Training and initialization seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Longest supported sequence; defaults from the dataset.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// TOML file with training hyperparameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parent directory of run directories.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mode: Mode,
    pub window: usize,
    pub max_len: usize,
}

/// Everything that determines a run's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub model: ModelSpec,
    pub split: SplitSpec,
    pub train: TrainConfig,
}

/// Hex SHA-256 over the given parts.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex::encode(h.finalize())
}

impl RunConfig {
    /// Directory name: hash of the config and the dataset file contents.
    fn id(&self, toml: &str, dataset: &Path) -> Result<String> {
        let bytes = fs::read(dataset).with_context(|| format!("reading {}", dataset.display()))?;
        Ok(digest(&[toml.as_bytes(), &bytes])[..16].to_string())
    }
}

fn train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(p) = args.pruning {
        cfg.pruning = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let train = train_config(args)?;
    let dataset = args.dataset.load()?;
    let max_len = args.max_len.unwrap_or_else(|| default_max_len(&dataset));
    let model = ModelConfig::new(dataset.schema.clone(), args.window, max_len, args.mode)?;
    let config = RunConfig {
        dataset: args.dataset.source(),
        model: ModelSpec {
            mode: args.mode,
            window: args.window,
            max_len,
        },
        split: SplitSpec::with_seed(args.split_seed),
        train,
    };
    let toml_text = toml::to_string(&config)?;
    let dir = args.out.join(config.id(&toml_text, &args.dataset.path)?);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), &toml_text)?;

    let splits = Splits::new(&dataset, &config.split)?;
    let (result, report) = run_seed(&splits, &model, &config.train)?;
    fs::write(dir.join("report.jsonl"), report.to_jsonl()?)?;
    save_checkpoint(&report.model, &dir.join("checkpoint.json"))?;
    let text = rule_text(&result.rule, &model.schema);
    fs::write(dir.join("rule.txt"), format!("{text}\n"))?;
    fs::write(
        dir.join("result.json"),
        serde_json::to_string_pretty(&result)?,
    )?;

    println!("run: {}", dir.display());
    println!("best epoch: {}", result.best_epoch);
    println!(
        "validation: accuracy {:.4}, balanced accuracy {:.4}",
        result.val.accuracy, result.val.balanced_accuracy
    );
    println!(
        "test: accuracy {:.4}, balanced accuracy {:.4}, penalty {}",
        result.test.accuracy, result.test.balanced_accuracy, result.test.penalty
    );
    println!("rule: {text}");
    Ok(())
}
