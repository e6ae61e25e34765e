mod benchmark;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cr2n::checkpoint::load_checkpoint;
use cr2n::data::{balance_dataset, generate_synthetic, write_dataset, Dataset};
use cr2n::interpreter::equivalence_check;
use cr2n::penalty::binarized_penalty;
use cr2n::rule::{pretty_print, rule_text};
use cr2n::training::{evaluate, Pruning};
use cr2n::{extract_rule, parse_rule, Mode};
use serde_json::json;

use crate::run::DatasetArgs;

#[derive(Parser)]
#[command(
    name = "cr2n",
    version,
    about = "Learn interpretable sequence classification rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate(GenerateArgs),
    /// Train one model and write its artifacts under `<out>/<hash>/`.
    Train(run::TrainArgs),
    /// Print the rule encoded by a checkpoint.
    Extract(ExtractArgs),
    /// Score a checkpoint on a dataset and verify the rule against the network.
    Evaluate(EvaluateArgs),
    /// Run a benchmark grid and print mean ± std per cell.
    Benchmark(benchmark::BenchmarkArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Ground truth rule id (1 to 4).
    #[arg(long)]
    gt: u8,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Resample to `n` sequences with equal class counts.
    #[arg(long)]
    balanced: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; defaults to `synthetic-<id>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    checkpoint: PathBuf,
    /// Emit a JSON record instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    checkpoint: PathBuf,
    #[command(flatten)]
    dataset: DatasetArgs,
}

pub(crate) fn parse_pruning(s: &str) -> Result<Pruning, String> {
    match s {
        "none" => Ok(Pruning::None),
        n => n
            .parse()
            .map(Pruning::StartEpoch)
            .map_err(|_| format!("expected 'none' or a start epoch, got '{n}'")),
    }
}

pub(crate) fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: cr2n::Error| e.to_string())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let mut d = generate_synthetic(args.gt, args.n, args.seed)?;
    if args.balanced {
        d = balance_dataset(&d, args.n, args.seed)?;
    }
    let name = format!("{}{}", args.gt, if args.balanced { "b" } else { "" });
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("synthetic-{name}.csv")));
    write_dataset(&d, &out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{}: {} sequences, {} positive ({:.1}%)",
        out.display(),
        d.len(),
        d.positives(),
        100.0 * d.positive_rate()
    );
    Ok(())
}

fn extract(args: &ExtractArgs) -> Result<()> {
    let model = load_checkpoint(&args.checkpoint)?;
    let binarized = model.binarize();
    let rule = extract_rule(&binarized);
    let schema = &model.config.schema;
    let text = rule_text(&rule, schema);
    let reparsed = parse_rule(&text, schema, Some(model.config.max_len))
        .with_context(|| format!("re-parsing extracted rule '{text}'"))?;
    if reparsed != rule {
        bail!("extracted rule '{text}' does not survive a parse round trip");
    }
    let penalty = binarized_penalty(&model);
    if args.json {
        let record = json!({
            "rule": text,
            "expression": pretty_print(&rule, schema),
            "mode": model.mode(),
            "penalty": penalty,
            "conjunctions": rule.conjunction_count(),
            "literals": rule.leaf_literal_count(),
            "longest_conjunction": rule.max_conjunction_len(),
            "sparsity": model.sparsity(),
            "round_trip": true,
        });
        println!("{record}");
    } else {
        println!("{text}");
        println!("mode: {}", model.mode());
        println!("penalty: {penalty}");
        println!("conjunctions: {}", rule.conjunction_count());
        println!("literals: {}", rule.leaf_literal_count());
        println!("longest conjunction: {}", rule.max_conjunction_len());
        println!("sparsity: {:.4}", model.sparsity());
        println!("round trip: ok");
    }
    Ok(())
}

fn check_schema(d: &Dataset, model: &cr2n::Cr2nModel, path: &Path) -> Result<()> {
    if d.schema != model.config.schema {
        bail!(
            "{} uses a different alphabet from the checkpoint",
            path.display()
        );
    }
    if d.max_len() > model.config.max_len {
        bail!(
            "{} has sequences of length {}, the checkpoint supports at most {}",
            path.display(),
            d.max_len(),
            model.config.max_len
        );
    }
    Ok(())
}

/// Returns false when the rule and the network disagree somewhere.
fn evaluate_cmd(args: &EvaluateArgs) -> Result<bool> {
    let model = load_checkpoint(&args.checkpoint)?;
    let d = args.dataset.load()?;
    check_schema(&d, &model, &args.dataset.path)?;
    let binarized = model.binarize();
    let metrics = evaluate(&binarized, &d.encode(&model.config)?, &d.labels)?;
    let rule = extract_rule(&binarized);
    let report = equivalence_check(&binarized, &rule, &d.sequences)?;
    let record = json!({
        "accuracy": metrics.accuracy,
        "balanced_accuracy": metrics.balanced_accuracy,
        "penalty": metrics.penalty,
        "confusion": metrics.confusion,
        "rule": rule_text(&rule, &model.config.schema),
        "equivalence": { "checked": report.checked, "mismatches": report.mismatches.len() },
    });
    println!("{record}");
    for m in report.mismatches.iter().take(10) {
        eprintln!(
            "mismatch on {}: network {}, rule {}",
            m.sequence.render(&model.config.schema),
            u8::from(m.model),
            u8::from(m.rule)
        );
    }
    Ok(report.is_equivalent())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Train(a) => run::train(a).map(|_| true),
        Command::Extract(a) => extract(a).map(|_| true),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Benchmark(a) => benchmark::benchmark(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: extracted rule and network disagree");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
