//! Substring probe data: pairs `(t, w)` where `t` is shorter than `w`,
//! labelled by contiguous containment of surfaces.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

use super::dataset::{Label, ProbeDataset, ProbeExample, TaskKind};
use super::folds::FoldPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default)]
    pub seed: u64,
    /// Negatives drawn per training positive.
    #[serde(default = "default_negative_ratio")]
    pub negative_ratio: f64,
    /// Cap on evaluation pairs per fold; `None` evaluates every candidate.
    #[serde(default = "default_max_eval_pairs")]
    pub max_eval_pairs: Option<usize>,
}

fn default_negative_ratio() -> f64 {
    1.0
}

fn default_max_eval_pairs() -> Option<usize> {
    Some(2_000_000)
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 0,
            negative_ratio: default_negative_ratio(),
            max_eval_pairs: default_max_eval_pairs(),
        }
    }
}

/// Training and evaluation pairs for one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstringFold {
    pub fold: usize,
    pub train: ProbeDataset,
    pub eval: ProbeDataset,
    /// Candidate pairs in the test split before any cap.
    pub eval_candidates: u64,
    /// Set when the fold cannot be trained.
    pub skipped: Option<String>,
}

/// Contiguous containment over code points. Valid UTF-8 is
/// self-synchronizing, so a byte-level match is a code-point match.
pub fn is_substring(t: &str, w: &str) -> bool {
    w.contains(t)
}

/// Positive pairs over a whole vocabulary, from which per-fold training
/// and evaluation sets are drawn.
pub struct SubstringPairs {
    lens: Vec<usize>,
    /// (t, w) positive pairs over the whole vocabulary.
    positives: Vec<(usize, usize)>,
    positive_set: HashSet<(usize, usize)>,
}

impl SubstringPairs {
    pub fn new<T: Scalar>(table: &EmbeddingTable<T>) -> Self {
        let chars: Vec<Vec<char>> = table.tokens().iter().map(|t| t.surface.chars().collect()).collect();
        let lens: Vec<usize> = chars.iter().map(|c| c.len()).collect();
        let mut by_surface: HashMap<&str, Vec<usize>> = HashMap::new();
        for (id, tok) in table.tokens().iter().enumerate() {
            by_surface.entry(tok.surface.as_str()).or_default().push(id);
        }
        let mut positives = Vec::new();
        let mut seen = HashSet::new();
        let mut buf = String::new();
        for (w, wc) in chars.iter().enumerate() {
            seen.clear();
            for start in 0..wc.len() {
                for end in start + 1..=wc.len() {
                    if end - start >= wc.len() {
                        continue;
                    }
                    buf.clear();
                    buf.extend(&wc[start..end]);
                    if !seen.insert(buf.clone()) {
                        continue;
                    }
                    if let Some(ids) = by_surface.get(buf.as_str()) {
                        positives.extend(ids.iter().map(|&t| (t, w)));
                    }
                }
            }
        }
        positives.sort_unstable_by_key(|&(t, w)| (w, t));
        let positive_set = positives.iter().copied().collect();
        SubstringPairs {
            lens,
            positives,
            positive_set,
        }
    }

    fn is_positive(&self, t: usize, w: usize) -> bool {
        self.positive_set.contains(&(t, w))
    }

    /// Number of ordered pairs `(t, w)` within `ids` with `len t < len w`.
    fn candidate_count(&self, ids: &[usize]) -> u64 {
        let mut sorted: Vec<usize> = ids.iter().map(|&i| self.lens[i]).collect();
        sorted.sort_unstable();
        ids.iter()
            .map(|&w| sorted.partition_point(|&l| l < self.lens[w]) as u64)
            .sum()
    }
}

fn example(t: usize, w: usize, positive: bool) -> ProbeExample {
    ProbeExample {
        word: w,
        sub: Some(t),
        label: Label::IsSubstring(positive),
    }
}

fn train_pairs(
    index: &SubstringPairs,
    folds: &FoldPlan,
    fold: usize,
    sampling: &SamplingConfig,
) -> Vec<ProbeExample> {
    let train_ids = folds.train_ids(fold);
    let positives: Vec<(usize, usize)> = index
        .positives
        .iter()
        .copied()
        .filter(|&(t, w)| !folds.is_test(t, fold) && !folds.is_test(w, fold))
        .collect();
    let available = index.candidate_count(&train_ids) - positives.len() as u64;
    let quota = ((positives.len() as f64) * sampling.negative_ratio).round() as u64;
    let quota = quota.min(available) as usize;

    let mut rng = seed::rng(seed::derive_seed(sampling.seed, "substring-train", &[fold as u64]));
    let mut negatives: Vec<(usize, usize)> = Vec::with_capacity(quota);
    if quota > 0 && (quota as u64) * 2 > available {
        // dense regime: enumerate every negative and subsample
        let mut all = Vec::new();
        for &w in &train_ids {
            for &t in &train_ids {
                if index.lens[t] < index.lens[w] && !index.is_positive(t, w) {
                    all.push((t, w));
                }
            }
        }
        let picks = index::sample(&mut rng, all.len(), quota);
        let mut picks = picks.into_vec();
        picks.sort_unstable();
        negatives.extend(picks.into_iter().map(|i| all[i]));
    } else {
        let mut chosen = HashSet::with_capacity(quota);
        while negatives.len() < quota {
            let w = train_ids[rng.gen_range(0..train_ids.len())];
            let t = train_ids[rng.gen_range(0..train_ids.len())];
            if index.lens[t] >= index.lens[w] || index.is_positive(t, w) {
                continue;
            }
            if chosen.insert((t, w)) {
                negatives.push((t, w));
            }
        }
    }

    let mut out: Vec<ProbeExample> = positives.iter().map(|&(t, w)| example(t, w, true)).collect();
    out.extend(negatives.iter().map(|&(t, w)| example(t, w, false)));
    out
}

fn eval_pairs(
    index: &SubstringPairs,
    folds: &FoldPlan,
    fold: usize,
    sampling: &SamplingConfig,
) -> (Vec<ProbeExample>, u64) {
    let test_ids = folds.test_ids(fold);
    let mut by_len = test_ids.clone();
    by_len.sort_by_key(|&i| (index.lens[i], i));
    // offsets[j] = number of candidate pairs whose word precedes test_ids[j]
    let mut offsets = Vec::with_capacity(test_ids.len() + 1);
    let mut total = 0u64;
    for &w in &test_ids {
        offsets.push(total);
        total += by_len.partition_point(|&i| index.lens[i] < index.lens[w]) as u64;
    }
    offsets.push(total);

    let pair_at = |k: u64| -> (usize, usize) {
        let j = offsets.partition_point(|&o| o <= k) - 1;
        let w = test_ids[j];
        let t = by_len[(k - offsets[j]) as usize];
        (t, w)
    };
    let label = |(t, w): (usize, usize)| example(t, w, index.is_positive(t, w));

    let pairs = match sampling.max_eval_pairs {
        Some(cap) if (cap as u64) < total => {
            let mut rng = seed::rng(seed::derive_seed(sampling.seed, "substring-eval", &[fold as u64]));
            let mut picks: Vec<u64> = index::sample(&mut rng, total as usize, cap)
                .into_iter()
                .map(|i| i as u64)
                .collect();
            picks.sort_unstable();
            picks.into_iter().map(|k| label(pair_at(k))).collect()
        }
        _ => (0..total).map(|k| label(pair_at(k))).collect(),
    };
    (pairs, total)
}

impl SubstringPairs {
    /// Number of positive pairs in the whole vocabulary.
    pub fn n_positives(&self) -> usize {
        self.positives.len()
    }

    fn check(&self, folds: &FoldPlan, sampling: &SamplingConfig) -> Result<()> {
        if folds.n_tokens() != self.lens.len() {
            return Err(Error::Shape(format!(
                "fold plan covers {} tokens, table has {}",
                folds.n_tokens(),
                self.lens.len()
            )));
        }
        if !(sampling.negative_ratio >= 0.0 && sampling.negative_ratio.is_finite()) {
            return Err(Error::Config("negative_ratio must be a finite non-negative number".into()));
        }
        if self.lens.iter().all(|&l| l == self.lens[0]) {
            return Err(Error::Validation(
                "substring task needs tokens of at least two distinct lengths".into(),
            ));
        }
        Ok(())
    }

    /// Training pairs (all positives plus sampled negatives) and evaluation
    /// pairs (every candidate inside the test split, optionally capped) for
    /// one fold. Pairs never cross the train/test boundary.
    pub fn fold(&self, folds: &FoldPlan, fold: usize, sampling: &SamplingConfig) -> Result<SubstringFold> {
        self.check(folds, sampling)?;
        if fold >= folds.k() {
            return Err(Error::Config(format!("fold {fold} out of range")));
        }
        let train = train_pairs(self, folds, fold, sampling);
        let (eval, eval_candidates) = eval_pairs(self, folds, fold, sampling);
        let has_positive = train.iter().any(|e| e.label == Label::IsSubstring(true));
        let skipped = if !has_positive {
            Some("no positive pairs in the training split".to_string())
        } else if eval.is_empty() {
            Some("no candidate pairs in the test split".to_string())
        } else {
            None
        };
        Ok(SubstringFold {
            fold,
            train: ProbeDataset {
                task: TaskKind::Substring,
                examples: train,
                dropped: 0,
            },
            eval: ProbeDataset {
                task: TaskKind::Substring,
                examples: eval,
                dropped: 0,
            },
            eval_candidates,
            skipped,
        })
    }
}

/// Every fold's substring data at once. For large vocabularies prefer
/// [`SubstringPairs::fold`], which materializes one fold at a time.
pub fn build_substring_dataset<T: Scalar>(
    table: &EmbeddingTable<T>,
    folds: &FoldPlan,
    sampling: &SamplingConfig,
) -> Result<Vec<SubstringFold>> {
    let pairs = SubstringPairs::new(table);
    (0..folds.k()).map(|f| pairs.fold(folds, f, sampling)).collect()
}
