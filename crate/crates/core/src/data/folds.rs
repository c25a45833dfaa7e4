use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// A shuffled k-fold partition of `0..rows`.
///
/// Test folds are contiguous chunks of one shuffled permutation; the first
/// `rows % folds` folds get one extra row. Training indices keep the shuffled
/// order, so a training prefix is a random subsample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_count: usize,
    pub seed: u64,
    pub train: Vec<Vec<usize>>,
    pub test: Vec<Vec<usize>>,
}

impl FoldSplit {
    pub fn rows(&self) -> usize {
        self.test.iter().map(Vec::len).sum()
    }
}

pub fn kfold_split(rows: usize, folds: usize, seed: u64) -> Result<FoldSplit> {
    if folds < 2 {
        return Err(Error::param(format!("need at least 2 folds, got {folds}")));
    }
    if rows < folds {
        return Err(Error::param(format!("{rows} rows cannot fill {folds} folds")));
    }
    let mut perm: Vec<usize> = (0..rows).collect();
    perm.shuffle(&mut rng_from_seed(seed));

    let (base, extra) = (rows / folds, rows % folds);
    let mut chunks = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        chunks.push(perm[start..start + len].to_vec());
        start += len;
    }
    let train = (0..folds)
        .map(|f| {
            chunks
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, c)| c.iter().copied())
                .collect()
        })
        .collect();
    Ok(FoldSplit {
        fold_count: folds,
        seed,
        train,
        test: chunks,
    })
}
