//! Reference predictors that ignore the object features.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::tutor::WordSet;

/// The `k` words with the highest training counts; ties go to the lower id.
pub fn most_frequent_words(train_counts: &[usize], k: usize) -> Result<WordSet> {
    if k > train_counts.len() {
        return Err(Error::param(format!("k={k} exceeds {} words", train_counts.len())));
    }
    let mut order: Vec<usize> = (0..train_counts.len()).collect();
    order.sort_by(|&a, &b| train_counts[b].cmp(&train_counts[a]).then(a.cmp(&b)));
    Ok(WordSet::new(order[..k].to_vec()))
}

/// One uniformly random `k`-subset of `0..m` per row.
pub fn random_subsets(rows: usize, m: usize, k: usize, seed: u64) -> Result<Vec<WordSet>> {
    if k > m {
        return Err(Error::param(format!("k={k} exceeds m={m}")));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..rows).map(|_| WordSet::new(sample(&mut rng, m, k).into_vec())).collect())
}
