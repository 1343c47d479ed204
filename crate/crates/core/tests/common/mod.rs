//! Independent reference implementations shared by the integration tests
//! and the acceptance run.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfprobe::embedding::save_jsonl;
use surfprobe::probe::{loss_and_grad, Head, InputLayout, Inputs, MlpConfig, MlpParams, Targets};
use surfprobe::synthetic::{generate, LengthDistribution, Scheme, SyntheticSpec};

pub const ALPHABET_26: &str = "abcdefghijklmnopqrstuvwxyz";

/// Mean squared error, summed left to right.
pub fn brute_mse(preds: &[f64], labels: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..preds.len() {
        s += (preds[i] - labels[i]) * (preds[i] - labels[i]);
    }
    s / preds.len() as f64
}

pub fn brute_accuracy(preds: &[u32], labels: &[u32]) -> f64 {
    let mut hits = 0;
    for i in 0..preds.len() {
        if preds[i] == labels[i] {
            hits += 1;
        }
    }
    hits as f64 / preds.len() as f64
}

/// Weighted F1 from the textbook definitions: per-class precision and
/// recall by scanning the whole set, harmonic mean, weights by true support.
pub fn brute_weighted_f1(preds: &[u32], labels: &[u32]) -> f64 {
    let mut classes: Vec<u32> = preds.iter().chain(labels).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let n = labels.len() as f64;
    let mut total = 0.0;
    for c in classes {
        let mut tp = 0.0;
        let mut pred_c = 0.0;
        let mut true_c = 0.0;
        for i in 0..labels.len() {
            if preds[i] == c {
                pred_c += 1.0;
            }
            if labels[i] == c {
                true_c += 1.0;
                if preds[i] == c {
                    tp += 1.0;
                }
            }
        }
        let precision = if pred_c > 0.0 { tp / pred_c } else { 0.0 };
        let recall = if true_c > 0.0 { tp / true_c } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        total += true_c / n * f1;
    }
    total
}

#[derive(Debug, Clone, Copy)]
pub struct MetricCheck {
    pub sets: usize,
    pub max_abs_diff: f64,
}

/// Compares the library metrics with the brute-force versions on random
/// prediction sets.
pub fn metric_oracle_check(sets: usize, seed: u64) -> MetricCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..sets {
        let n = rng.gen_range(1..=300);
        let k = rng.gen_range(1..=12);
        // skew predictions toward the truth so all regimes show up
        let hit_rate: f64 = rng.gen();
        let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=k)).collect();
        let preds: Vec<u32> = labels
            .iter()
            .map(|&l| if rng.gen_bool(hit_rate) { l } else { rng.gen_range(1..=k + 2) })
            .collect();
        let real_labels: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let real_preds: Vec<f64> = real_labels.iter().map(|l| l + rng.gen_range(-3.0..3.0)).collect();

        let diffs = [
            surfprobe::metrics::weighted_f1(&preds, &labels).unwrap() - brute_weighted_f1(&preds, &labels),
            surfprobe::metrics::accuracy(&preds, &labels).unwrap() - brute_accuracy(&preds, &labels),
            surfprobe::metrics::mse(&real_preds, &real_labels).unwrap() - brute_mse(&real_preds, &real_labels),
        ];
        for d in diffs {
            worst = worst.max(d.abs());
        }
    }
    MetricCheck {
        sets,
        max_abs_diff: worst,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheck {
    pub configs: usize,
    pub checked: usize,
    /// Coordinates skipped because a ReLU changed state inside the stencil.
    pub skipped: usize,
    pub max_rel_err: f64,
}

const FD_STEP: f64 = 1e-5;

fn relu_masks(params: &MlpParams<f64>, x: &Inputs<f64>) -> Vec<bool> {
    let (_, cache) = params.forward(x).unwrap();
    cache.hidden.iter().flatten().map(|&h| h > 0.0).collect()
}

fn loss(params: &MlpParams<f64>, x: &Inputs<f64>, head: &Head<'_, f64>, targets: &Targets<f64>) -> f64 {
    loss_and_grad(params, x, head, targets).unwrap().0
}

/// Analytic gradients against central differences on random small probes,
/// cycling through the regression, binary and character heads.
pub fn gradient_check(configs: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradCheck {
        configs,
        ..GradCheck::default()
    };
    for c in 0..configs {
        let in_dim = rng.gen_range(1..=8);
        let hidden = rng.gen_range(1..=8);
        let layers = rng.gen_range(1..=4);
        let batch = rng.gen_range(1..=4);
        let n_chars = rng.gen_range(2..=6);
        let char_dim = rng.gen_range(1..=8);
        let decoder: Vec<f64> = (0..n_chars * char_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (head, out_dim, targets) = match c % 3 {
            0 => (
                Head::Regression,
                1,
                Targets::Real((0..batch).map(|_| rng.gen_range(0.0..10.0)).collect()),
            ),
            1 => (
                Head::Binary,
                1,
                Targets::Binary((0..batch).map(|_| rng.gen()).collect()),
            ),
            _ => (
                Head::Char {
                    decoder: &decoder,
                    n_chars,
                },
                char_dim,
                Targets::Class((0..batch).map(|_| rng.gen_range(0..n_chars)).collect()),
            ),
        };
        let cfg = MlpConfig::new(in_dim, out_dim).with_hidden(hidden).with_layers(layers);
        let mut params = MlpParams::<f64>::init(cfg, rng.gen()).unwrap();
        for layer in &mut params.layers {
            for b in &mut layer.bias {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let layout = if rng.gen_bool(0.5) {
            InputLayout::Dense
        } else {
            InputLayout::Sparse
        };
        let mut x = Inputs::new(layout, in_dim);
        for _ in 0..batch {
            let row: Vec<f64> = (0..in_dim)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) })
                .collect();
            x.push_row(&row);
        }

        let (_, analytic) = loss_and_grad(&params, &x, &head, &targets).unwrap();
        let analytic: Vec<f64> = analytic.slices().iter().flat_map(|s| s.iter().copied()).collect();
        let base_mask = relu_masks(&params, &x);
        for (i, &a) in analytic.iter().enumerate() {
            let original = get(&params, i);
            set(&mut params, i, original + FD_STEP);
            let plus = loss(&params, &x, &head, &targets);
            let mask_plus = relu_masks(&params, &x);
            set(&mut params, i, original - FD_STEP);
            let minus = loss(&params, &x, &head, &targets);
            let mask_minus = relu_masks(&params, &x);
            set(&mut params, i, original);
            if mask_plus != base_mask || mask_minus != base_mask {
                out.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            out.max_rel_err = out.max_rel_err.max(rel);
            out.checked += 1;
        }
    }
    out
}

fn get(params: &MlpParams<f64>, mut i: usize) -> f64 {
    for s in params.slices() {
        if i < s.len() {
            return s[i];
        }
        i -= s.len();
    }
    panic!("parameter index out of range")
}

fn set(params: &mut MlpParams<f64>, mut i: usize, v: f64) {
    for s in params.slices_mut() {
        if i < s.len() {
            s[i] = v;
            return;
        }
        i -= s.len();
    }
    panic!("parameter index out of range")
}

pub fn spec(alphabet: &str, vocab_size: usize, scheme: Scheme, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        alphabet: alphabet.to_string(),
        vocab_size,
        length: LengthDistribution {
            min: 1,
            max: 10,
            weights: None,
        },
        scheme,
        seed,
    }
}

/// Generates a synthetic table and writes it as JSONL under `dir`.
pub fn write_corpus(dir: &Path, name: &str, spec: &SyntheticSpec) -> PathBuf {
    let table = generate(spec).unwrap();
    let path = dir.join(format!("{name}.jsonl"));
    save_jsonl(&table, &path).unwrap();
    path
}
