//! Seeded 7:1:2 train/validation/test partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disjoint index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Split sizes for `n` samples: round-half-up 70 % and 10 %, remainder to test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    // Integer form of floor(0.7n + 0.5) and floor(0.1n + 0.5); avoids
    // binary rounding of 0.7 and 0.1.
    let train = (7 * n + 5) / 10;
    let val = (n + 5) / 10;
    (train, val, n - train - val)
}

/// Uniformly permutes `0..n` with a seeded generator and cuts it 7:1:2.
pub fn split_dataset(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_sizes(n);
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        val,
        test,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ratio_at_ten() {
        assert_eq!(split_dataset(10, 0).unwrap().sizes(), (7, 1, 2));
    }

    #[test]
    fn rejects_tiny_datasets() {
        assert!(matches!(split_dataset(9, 0), Err(Error::TooFewSamples { needed: 10, got: 9 })));
    }

    #[test]
    fn half_rounds_up() {
        // 0.7 * 15 = 10.5 and 0.1 * 15 = 1.5
        assert_eq!(split_sizes(15), (11, 2, 2));
        assert_eq!(split_sizes(25), (18, 3, 4));
    }
}
