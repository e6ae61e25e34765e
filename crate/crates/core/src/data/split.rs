use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(invalid("split fractions must be positive"));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("split fractions must sum to 1"));
        }
        Ok(())
    }
}

/// Per-class split into (train, val, test): `round(train * n)` and
/// `round(val * n)` items of each class, the remainder to test.
pub fn stratified_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] == class).collect();
        if idx.len() < 3 {
            return Err(invalid(format!(
                "class {} has {} members; a stratified split needs at least 3",
                u8::from(class),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let n_train = (spec.train * n).round() as usize;
        let n_val = ((spec.val * n).round() as usize).min(idx.len() - n_train);
        parts[0].extend(&idx[..n_train]);
        parts[1].extend(&idx[n_train..n_train + n_val]);
        parts[2].extend(&idx[n_train + n_val..]);
    }
    for p in &mut parts {
        p.shuffle(&mut rng);
    }
    Ok((
        d.subset(&parts[0]),
        d.subset(&parts[1]),
        d.subset(&parts[2]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Provenance;
    use crate::sequence::{Alphabet, Schema, Sequence};
    use proptest::prelude::*;

    fn dataset(pos: usize, neg: usize) -> Dataset {
        let n = pos + neg;
        Dataset::new(
            Schema::single(Alphabet::letters('T')),
            (0..n)
                .map(|i| {
                    Sequence::new(vec![
                        (i % 20) as u16,
                        (i / 20 % 20) as u16,
                        (i / 400) as u16,
                    ])
                })
                .collect(),
            (0..n).map(|i| i < pos).collect(),
            Provenance::default(),
        )
        .unwrap()
    }

    fn counts(d: &Dataset) -> (usize, usize) {
        (d.positives(), d.negatives())
    }

    #[test]
    fn balanced_thousand() {
        let (tr, va, te) = stratified_split(&dataset(500, 500), &SplitSpec::default()).unwrap();
        assert_eq!(counts(&tr), (300, 300));
        assert_eq!(counts(&va), (100, 100));
        assert_eq!(counts(&te), (100, 100));
    }

    #[test]
    fn peptide_proportions() {
        let (tr, va, te) = stratified_split(&dataset(750, 199), &SplitSpec::default()).unwrap();
        assert_eq!(counts(&tr), (450, 119));
        assert_eq!(counts(&va), (150, 40));
        assert_eq!(counts(&te), (150, 40));
    }

    #[test]
    fn deterministic_and_disjoint() {
        let d = dataset(40, 60);
        let a = stratified_split(&d, &SplitSpec::with_seed(5)).unwrap();
        let b = stratified_split(&d, &SplitSpec::with_seed(5)).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<_> = [&a.0, &a.1, &a.2]
            .iter()
            .flat_map(|p| p.sequences.clone())
            .collect();
        all.sort();
        let mut orig = d.sequences.clone();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn rejects_small_class_and_bad_fractions() {
        assert!(stratified_split(&dataset(2, 50), &SplitSpec::default()).is_err());
        let spec = SplitSpec {
            train: 0.7,
            ..SplitSpec::default()
        };
        assert!(stratified_split(&dataset(20, 20), &spec).is_err());
    }

    proptest! {
        #[test]
        fn class_proportions_within_one(pos in 3usize..200, neg in 3usize..200, seed in any::<u64>()) {
            let spec = SplitSpec::with_seed(seed);
            let (tr, va, te) = stratified_split(&dataset(pos, neg), &spec).unwrap();
            for (part, frac) in [(&tr, spec.train), (&va, spec.val), (&te, spec.test)] {
                prop_assert!((part.positives() as f64 - frac * pos as f64).abs() <= 1.0);
                prop_assert!((part.negatives() as f64 - frac * neg as f64).abs() <= 1.0);
            }
        }
    }
}
