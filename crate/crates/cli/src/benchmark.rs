//! Benchmark grids: every cell trains `seeds` models, results are cached
//! per seed so an interrupted grid resumes where it stopped.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use cr2n::data::Dataset;
use cr2n::experiment::{
    default_max_len, run_seed, summarize, Cell, CellSummary, DatasetSource, GridConfig, RunResult,
    Splits,
};
use cr2n::training::TrainConfig;
use cr2n::ModelConfig;
use rayon::prelude::*;
use serde::Serialize;

use crate::run::digest;

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Grid TOML file.
    grid: PathBuf,
    /// Directory holding one subdirectory per cell.
    #[arg(long, default_value = "runs/benchmark")]
    out: PathBuf,
}

#[derive(Serialize)]
struct CellConfig<'a> {
    cell: &'a Cell,
    split: &'a cr2n::data::SplitSpec,
    train: &'a TrainConfig,
}

#[derive(Serialize)]
struct CellRecord {
    cell: String,
    directory: PathBuf,
    summary: Option<CellSummary>,
    failures: Vec<String>,
}

fn seed_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}.json"))
}

fn run_one(
    splits: &Splits,
    model: &ModelConfig,
    train: &TrainConfig,
    dir: &Path,
) -> Result<RunResult> {
    let path = seed_path(dir, train.seed);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(r) = serde_json::from_str(&text) {
            return Ok(r);
        }
    }
    let (result, _) = run_seed(splits, model, train)?;
    fs::write(&path, serde_json::to_string(&result)?)?;
    Ok(result)
}

fn prepare(cell: &Cell, grid: &GridConfig) -> Result<(Dataset, Splits, ModelConfig)> {
    let d = cell.dataset.load().with_context(|| match &cell.dataset {
        DatasetSource::File { path } | DatasetSource::Peptides { path } => {
            format!("loading {}", path.display())
        }
        other => format!("generating dataset {}", other.name()),
    })?;
    let splits = Splits::new(&d, &grid.split)?;
    let model = ModelConfig::new(
        d.schema.clone(),
        cell.window,
        default_max_len(&d),
        cell.mode,
    )?;
    Ok((d, splits, model))
}

fn run_cell(cell: &Cell, grid: &GridConfig, out: &Path) -> Result<CellRecord> {
    let config = CellConfig {
        cell,
        split: &grid.split,
        train: &grid.train,
    };
    let text = toml::to_string(&config)?;
    let dir = out.join(&digest(&[text.as_bytes()])[..16]);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("cell.toml"), &text)?;

    let mut record = CellRecord {
        cell: cell.label(),
        directory: dir.clone(),
        summary: None,
        failures: Vec::new(),
    };
    let (_, splits, model) = match prepare(cell, grid) {
        Ok(p) => p,
        Err(e) => {
            record.failures.push(format!("{e:#}"));
            return Ok(record);
        }
    };
    let outcomes: Vec<_> = (0..grid.seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let train = TrainConfig {
                seed,
                ..grid.train.clone()
            };
            run_one(&splits, &model, &train, &dir).map_err(|e| format!("seed {seed}: {e:#}"))
        })
        .collect();
    let mut results = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) => record.failures.push(e),
        }
    }
    if !results.is_empty() {
        record.summary = Some(summarize(&results));
    }
    Ok(record)
}

fn table(records: &[CellRecord]) -> String {
    let header = [
        "Cell",
        "Runs",
        "Accuracy",
        "Bal. Acc.",
        "Penalty",
        "Epoch",
        "Failed",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in records {
        let mut row = vec![r.cell.clone()];
        match &r.summary {
            Some(s) => row.extend([
                s.runs.to_string(),
                format!("{:.1}", s.accuracy),
                format!("{:.1}", s.balanced_accuracy),
                format!("{:.1}", s.penalty),
                format!("{:.1}", s.epoch),
            ]),
            None => row.extend(["0".into(), "-".into(), "-".into(), "-".into(), "-".into()]),
        }
        row.push(r.failures.len().to_string());
        rows.push(row);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(v, &w)| format!("{v}{}", " ".repeat(w - v.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let text = fs::read_to_string(&args.grid)
        .with_context(|| format!("reading {}", args.grid.display()))?;
    let grid = GridConfig::from_toml(&text)?;
    let cells = grid.cells();
    if cells.is_empty() || grid.seeds == 0 {
        eprintln!(
            "warning: grid {} has no runs; nothing to do",
            args.grid.display()
        );
        return Ok(());
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let records = cells
        .par_iter()
        .map(|c| run_cell(c, &grid, &args.out))
        .collect::<Result<Vec<_>>>()?;

    let mut jsonl = String::new();
    for r in &records {
        jsonl.push_str(&serde_json::to_string(r)?);
        jsonl.push('\n');
        for f in &r.failures {
            eprintln!("{}: {f}", r.cell);
        }
    }
    fs::write(args.out.join("summary.jsonl"), jsonl)?;
    print!("{}", table(&records));
    Ok(())
}
