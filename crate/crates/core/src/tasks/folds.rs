use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Seeded partition of a vocabulary into `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<u32>,
}

impl FoldPlan {
    /// Shuffles token ids with `seed` and deals them round-robin, so fold
    /// sizes differ by at most one.
    pub fn new(n_tokens: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {k}")));
        }
        if k > n_tokens {
            return Err(Error::Config(format!(
                "{k} folds requested for only {n_tokens} tokens"
            )));
        }
        let mut order: Vec<usize> = (0..n_tokens).collect();
        order.shuffle(&mut seed::rng(seed::derive_seed(seed, "folds", &[k as u64])));
        let mut assignments = vec![0u32; n_tokens];
        for (pos, &id) in order.iter().enumerate() {
            assignments[id] = (pos % k) as u32;
        }
        Ok(FoldPlan { k, assignments })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_tokens(&self) -> usize {
        self.assignments.len()
    }

    pub fn fold_of(&self, id: usize) -> usize {
        self.assignments[id] as usize
    }

    pub fn is_test(&self, id: usize, fold: usize) -> bool {
        self.fold_of(id) == fold
    }

    pub fn test_ids(&self, fold: usize) -> Vec<usize> {
        (0..self.n_tokens()).filter(|&i| self.is_test(i, fold)).collect()
    }

    pub fn train_ids(&self, fold: usize) -> Vec<usize> {
        (0..self.n_tokens()).filter(|&i| !self.is_test(i, fold)).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a as usize] += 1;
        }
        sizes
    }
}
