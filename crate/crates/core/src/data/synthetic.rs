use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Provenance};
use crate::error::{invalid, Result};
use crate::interpreter::matches;
use crate::rule::parse_rule;
use crate::sequence::{Alphabet, Schema, Sequence};

/// Longest generated sequence.
pub const SYNTHETIC_MAX_LEN: usize = 14;
const MIN_LEN: usize = 4;

const GROUND_TRUTHS: [&str; 4] = [
    "C at t-4",
    "A at t-6 and C at t-4",
    "(A at t-6 and C at t-4) or (B at t-5 and C at t-3)",
    "B-D in sequence",
];

/// Letters A to F.
pub fn synthetic_schema() -> Schema {
    Schema::single(Alphabet::letters('F'))
}

/// Rule text labeling generator `id` (1 to 4).
pub fn ground_truth(id: u8) -> Result<&'static str> {
    id.checked_sub(1)
        .and_then(|i| GROUND_TRUTHS.get(i as usize))
        .copied()
        .ok_or_else(|| invalid(format!("unknown ground truth {id}; expected 1 to 4")))
}

/// `n` uniform random sequences of length 4 to 14 over A..F, labeled by
/// ground truth `id`.
pub fn generate_synthetic(id: u8, n: usize, seed: u64) -> Result<Dataset> {
    let text = ground_truth(id)?;
    if n == 0 {
        return Err(invalid("dataset size must be at least 1"));
    }
    let schema = synthetic_schema();
    let rule = parse_rule(text, &schema, Some(SYNTHETIC_MAX_LEN))?;
    let symbols = schema.alphabet(0).len() as u16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sequences: Vec<Sequence> = (0..n)
        .map(|_| {
            let len = rng.gen_range(MIN_LEN..=SYNTHETIC_MAX_LEN);
            Sequence::new((0..len).map(|_| rng.gen_range(0..symbols)).collect())
        })
        .collect();
    let labels = sequences.iter().map(|s| matches(&rule, s)).collect();
    Dataset::new(
        schema,
        sequences,
        labels,
        Provenance {
            source: format!("synthetic ground truth {id}"),
            generator: Some(id),
            seed: Some(seed),
            ground_truth: Some(text.to_string()),
            balanced_to: None,
        },
    )
}
