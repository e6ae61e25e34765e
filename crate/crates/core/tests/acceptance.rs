//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.
//!
//! Set `CR2N_PEPTIDES` to the UCI anticancer peptides CSV to run the
//! peptides criterion. Set `CR2N_ACCEPTANCE_STRICT=1` to exit non-zero when
//! any criterion fails.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::{gradient_case, gradient_check, random_binarized, random_small_config};
use cr2n::data::{SplitSpec, SYNTHETIC_MAX_LEN};
use cr2n::experiment::{run_seed, summarize, DatasetSource, RunResult, Splits};
use cr2n::interpreter::{equivalence_check, matches};
use cr2n::model::{EncodedSequence, Mode, ModelConfig};
use cr2n::penalty::penalty_base;
use cr2n::rule::{extract_base_dnf, extract_rule, parse_rule};
use cr2n::tape::{Tape, WeightNoise};
use cr2n::training::{prune_rate, Pruning, TrainConfig};
use cr2n::{Cr2nModel, HardConcreteParams, Sequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 10;
const DATA_SEED: u64 = 1;
const SPLIT_SEED: u64 = 0;

const EQUIVALENCE_MODELS: u64 = 200;
const EQUIVALENCE_BUDGET: Duration = Duration::from_secs(60);
const PENALTY_MODELS: u64 = 200;
const GRADIENT_MODELS: u64 = 50;
/// At most this fraction of coordinates may be skipped as kink-adjacent.
const GRADIENT_MAX_EXCLUDED: f64 = 0.05;
const HARD_CONCRETE_SAMPLES: usize = 100_000;
const FINAL_PRUNE_RATE: f64 = 0.99;

const RECOVERY_ACCURACY: f64 = 0.99;
const RECOVERY_MIN_SEEDS: usize = 7;
const HIGH_ACCURACY: f64 = 0.95;
const GLOBAL_PENALTY_MAX: f64 = 10.0;
const LOCAL_PENALTY_MIN: f64 = 60.0;
const PENALTY_GAP: f64 = 3.0;
const PEPTIDES_ACCURACY: (f64, f64) = (91.2, 3.0);
const PEPTIDES_BALANCED: (f64, f64) = (81.8, 5.0);
const PEPTIDES_BUDGET: Duration = Duration::from_secs(30 * 60);

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn synthetic(ground_truth: u8, balanced: bool) -> Splits {
    let source = DatasetSource::Synthetic {
        ground_truth,
        balanced,
        n: 1000,
        seed: DATA_SEED,
    };
    Splits::new(&source.load().unwrap(), &SplitSpec::with_seed(SPLIT_SEED)).unwrap()
}

fn train_seeds(
    splits: &Splits,
    mode: Mode,
    window: usize,
    max_len: usize,
    pruning: Pruning,
) -> Vec<RunResult> {
    let model = ModelConfig::new(splits.train.schema.clone(), window, max_len, mode).unwrap();
    (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let train = TrainConfig {
                pruning,
                seed,
                ..TrainConfig::default()
            };
            run_seed(splits, &model, &train).unwrap().0
        })
        .collect()
}

fn equivalence() -> Outcome {
    let start = Instant::now();
    let mismatches: usize = (0..EQUIVALENCE_MODELS)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = random_small_config(&mut rng);
            let p = rng.gen_range(0.2..0.8);
            let model = random_binarized(&cfg, p, &mut rng);
            let rule = extract_rule(&model);
            let seqs = Sequence::enumerate_all(cfg.schema.alphabet(0).len(), cfg.max_len);
            equivalence_check(&model, &rule, &seqs)
                .unwrap()
                .mismatches
                .len()
        })
        .sum();
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < EQUIVALENCE_BUDGET,
        format!(
            "{EQUIVALENCE_MODELS} models, {mismatches} mismatches, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn penalty_oracle() -> Outcome {
    let bad = (0..PENALTY_MODELS)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let cfg = random_small_config(&mut rng);
            let p = rng.gen_range(0.1..0.9);
            let model = random_binarized(&cfg, p, &mut rng);
            penalty_base(&model.values) != extract_base_dnf(&model).literal_count() as f64
        })
        .count();
    verdict(
        bad == 0,
        format!("{PENALTY_MODELS} models, {bad} disagreements"),
    )
}

fn gradients() -> Outcome {
    let results: Vec<_> = (0..GRADIENT_MODELS)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
            let (model, batch, labels, noise) = gradient_case(&mut rng);
            let refs: Vec<&EncodedSequence> = batch.iter().collect();
            gradient_check(&model, &refs, &labels, &noise, 0.05)
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.checked).sum();
    let excluded: usize = results.iter().map(|r| r.excluded).sum();
    let failures: usize = results.iter().map(|r| r.failures.len()).sum();
    let worst = results.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let excluded_frac = excluded as f64 / (checked + excluded).max(1) as f64;
    verdict(
        failures == 0 && checked > 0 && excluded_frac <= GRADIENT_MAX_EXCLUDED,
        format!(
            "{GRADIENT_MODELS} models, {checked} coordinates, {excluded} excluded, {failures} failures, max rel err {worst:.1e}"
        ),
    )
}

fn hard_concrete() -> Outcome {
    let p = HardConcreteParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut zeros, mut ones, mut in_range) = (0, 0, true);
    for _ in 0..HARD_CONCRETE_SAMPLES {
        let u: f64 = rng.sample(rand::distributions::Open01);
        let w = p.sample(0.0, u).unwrap().value;
        in_range &= (0.0..=1.0).contains(&w);
        zeros += usize::from(w == 0.0);
        ones += usize::from(w == 1.0);
    }
    let det = p.deterministic(0.0);
    verdict(
        in_range && zeros > 0 && ones > 0 && det == 0.5,
        format!(
            "P(W=0) = {:.4}, P(W=1) = {:.4}, deterministic(0) = {det}",
            zeros as f64 / HARD_CONCRETE_SAMPLES as f64,
            ones as f64 / HARD_CONCRETE_SAMPLES as f64
        ),
    )
}

fn pruning() -> Outcome {
    let s_f = 1200;
    let endpoints = prune_rate(0, s_f, FINAL_PRUNE_RATE) == 0.0
        && prune_rate(s_f, s_f, FINAL_PRUNE_RATE) == FINAL_PRUNE_RATE;
    let monotone = (0..s_f)
        .all(|s| prune_rate(s, s_f, FINAL_PRUNE_RATE) <= prune_rate(s + 1, s_f, FINAL_PRUNE_RATE));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = ModelConfig::new(common::letters(4), 3, 5, Mode::Local).unwrap();
    let mut model = Cr2nModel::new(cfg.clone(), &mut rng).unwrap();
    cr2n::training::prune_step(&mut model, s_f / 2, s_f, FINAL_PRUNE_RATE);
    let enc: Vec<_> = (1..=5)
        .map(|n| {
            cfg.encode(&common::random_sequence(4, n, &mut rng))
                .unwrap()
        })
        .collect();
    let refs: Vec<_> = enc.iter().collect();
    let mut tape = Tape::new();
    let ys = tape
        .forward(&model, &refs, &WeightNoise::sample(&model, &mut rng))
        .unwrap();
    let grads = tape.backward(&vec![1.0; ys.len()], 0.1).unwrap();
    let mut masked = 0;
    let mut leaked = 0;
    for (m, g) in model.trainable().iter().zip(grads.trainable(Mode::Local)) {
        for (keep, gi) in m.mask.iter().zip(g) {
            if !keep {
                masked += 1;
                leaked += usize::from(*gi != 0.0);
            }
        }
    }
    verdict(
        endpoints && monotone && masked > 0 && leaked == 0,
        format!("r(0) = {}, r(s_f) = {}, monotone {monotone}, {masked} masked weights, {leaked} with gradient", prune_rate(0, s_f, FINAL_PRUNE_RATE), prune_rate(s_f, s_f, FINAL_PRUNE_RATE)),
    )
}

fn recovery() -> Outcome {
    let splits = synthetic(1, true);
    let results = train_seeds(
        &splits,
        Mode::Local,
        3,
        SYNTHETIC_MAX_LEN,
        Pruning::StartEpoch(30),
    );
    let truth = parse_rule("C at t-4", &splits.test.schema, None).unwrap();
    let accurate = results
        .iter()
        .filter(|r| r.test.accuracy >= RECOVERY_ACCURACY)
        .count();
    let exact = results
        .iter()
        .filter(|r| {
            splits
                .test
                .sequences
                .iter()
                .all(|s| matches(&r.rule, s) == matches(&truth, s))
        })
        .count();
    verdict(
        accurate >= RECOVERY_MIN_SEEDS && exact >= 1,
        format!("{accurate}/{SEEDS} seeds with test accuracy >= {RECOVERY_ACCURACY}, {exact}/{SEEDS} rules equal to \"C at t-4\" on the test set"),
    )
}

fn dataset_four() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut penalties = (0.0, 0.0);
    for balanced in [false, true] {
        let splits = synthetic(4, balanced);
        for mode in [Mode::Local, Mode::Global] {
            let results = train_seeds(&splits, mode, 3, SYNTHETIC_MAX_LEN, Pruning::None);
            let s = summarize(&results);
            ok &= s.accuracy.mean / 100.0 > HIGH_ACCURACY;
            parts.push(format!(
                "4{} {mode} acc {:.1}",
                if balanced { "b" } else { "" },
                s.accuracy
            ));
            if !balanced {
                match mode {
                    Mode::Local => penalties.0 = s.penalty.mean,
                    Mode::Global => penalties.1 = s.penalty.mean,
                }
            }
        }
    }
    let (local, global) = penalties;
    let absolute = local > LOCAL_PENALTY_MIN && global < GLOBAL_PENALTY_MAX;
    let gap = local >= PENALTY_GAP * global;
    ok &= gap;
    parts.push(format!(
        "dataset 4 penalty local {local:.1} vs global {global:.1} (absolute bounds {}, {PENALTY_GAP}x gap {})",
        if absolute { "met" } else { "drifted" },
        if gap { "holds" } else { "missing" }
    ));
    verdict(ok, parts.join("; "))
}

fn dataset_three_exact() -> Outcome {
    let splits = synthetic(3, true);
    let results = train_seeds(
        &splits,
        Mode::Local,
        6,
        SYNTHETIC_MAX_LEN,
        Pruning::StartEpoch(30),
    );
    let truth = parse_rule(
        "(B at t-5 and C at t-3) or (A at t-6 and C at t-4)",
        &splits.test.schema,
        None,
    )
    .unwrap();
    let exact = results.iter().filter(|r| r.rule == truth).count();
    verdict(
        exact >= 1,
        format!("{exact}/{SEEDS} seeds extracted the ground truth exactly"),
    )
}

fn failure_mode() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for id in [2, 3] {
        let splits = synthetic(id, false);
        let results = train_seeds(&splits, Mode::Local, 3, SYNTHETIC_MAX_LEN, Pruning::None);
        let empty = results
            .iter()
            .filter(|r| r.rule.is_empty_rule() && r.test.balanced_accuracy == 0.5)
            .count();
        ok &= empty * 2 > SEEDS as usize;
        parts.push(format!(
            "dataset {id}: {empty}/{SEEDS} seeds learned the empty rule"
        ));
    }
    verdict(ok, parts.join("; "))
}

fn peptides() -> Outcome {
    let Some(path) = std::env::var_os("CR2N_PEPTIDES").map(PathBuf::from) else {
        return Outcome::Skip("CR2N_PEPTIDES not set; UCI peptides file unavailable".into());
    };
    if !path.exists() {
        return Outcome::Skip(format!("{} not found", path.display()));
    }
    let start = Instant::now();
    let d = DatasetSource::Peptides { path }.load().unwrap();
    let splits = Splits::new(&d, &SplitSpec::with_seed(SPLIT_SEED)).unwrap();
    let results = train_seeds(&splits, Mode::Global, 6, d.max_len(), Pruning::None);
    let s = summarize(&results);
    let elapsed = start.elapsed();
    verdict(
        (s.accuracy.mean - PEPTIDES_ACCURACY.0).abs() <= PEPTIDES_ACCURACY.1
            && (s.balanced_accuracy.mean - PEPTIDES_BALANCED.0).abs() <= PEPTIDES_BALANCED.1
            && elapsed < PEPTIDES_BUDGET,
        format!(
            "accuracy {:.1}, balanced accuracy {:.1}, {:.0}s",
            s.accuracy,
            s.balanced_accuracy,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("equivalence suite", equivalence),
        ("penalty oracle", penalty_oracle),
        ("gradient check", gradients),
        ("hard concrete", hard_concrete),
        ("pruning schedule", pruning),
        ("rule recovery 1b", recovery),
        ("dataset 4/4b accuracy and penalty gap", dataset_four),
        ("dataset 3b exact rule", dataset_three_exact),
        ("unbalanced failure mode", failure_mode),
        ("peptides", peptides),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!(
            "{tag} {name}: {detail} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 && std::env::var("CR2N_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
