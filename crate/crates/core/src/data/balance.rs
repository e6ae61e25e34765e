use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{invalid, Result};

/// Resample to `target_size / 2` items per class: the minority class is
/// kept whole and topped up by sampling with replacement, the majority
/// class is subsampled without replacement. The result is shuffled.
pub fn balance_dataset(d: &Dataset, target_size: usize, seed: u64) -> Result<Dataset> {
    let half = target_size / 2;
    if half == 0 {
        return Err(invalid("target size must be at least 2"));
    }
    let pos: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i]).collect();
    let neg: Vec<usize> = (0..d.len()).filter(|&i| !d.labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(invalid("balancing needs both classes to be present"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resample = |class: &[usize]| -> Vec<usize> {
        if class.len() >= half {
            class.choose_multiple(&mut rng, half).copied().collect()
        } else {
            let mut out = class.to_vec();
            out.extend((class.len()..half).map(|_| class[rng.gen_range(0..class.len())]));
            out
        }
    };
    let mut indices = resample(&pos);
    indices.extend(resample(&neg));
    indices.shuffle(&mut rng);
    let mut out = d.subset(&indices);
    out.provenance.balanced_to = Some(2 * half);
    Ok(out)
}
