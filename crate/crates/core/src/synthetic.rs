//! Random string vocabularies whose embeddings carry a known amount of
//! surface information:
//!
//! * `positional_onehot`: every character one-hot at its position plus a
//!   normalized length coordinate. Length and every position are decodable.
//! * `char_bag`: counts of all character n-grams up to `max_n`. Containment
//!   is nearly (not exactly) decidable from two bags.
//! * `gaussian`: i.i.d. noise with no surface information at all.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingTable, Token};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthDistribution {
    pub min: usize,
    pub max: usize,
    /// Relative weight of each length `min..=max`; uniform when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    PositionalOnehot,
    CharBag {
        #[serde(default = "default_max_n")]
        max_n: usize,
    },
    Gaussian {
        #[serde(default = "default_sigma")]
        sigma: f64,
        dim: usize,
    },
}

fn default_max_n() -> usize {
    3
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Characters strings are drawn from, in feature order.
    pub alphabet: String,
    pub vocab_size: usize,
    pub length: LengthDistribution,
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
}

/// Upper bound on generated feature dimensions, to fail early instead of
/// allocating an unusable dense table.
const MAX_DIM: usize = 1 << 20;

impl SyntheticSpec {
    fn alphabet(&self) -> Result<Vec<char>> {
        let chars: Vec<char> = self.alphabet.chars().collect();
        if chars.is_empty() {
            return Err(Error::Config("alphabet must not be empty".into()));
        }
        let unique: HashSet<char> = chars.iter().copied().collect();
        if unique.len() != chars.len() {
            return Err(Error::Config("alphabet has repeated characters".into()));
        }
        if chars.iter().any(|c| c.is_whitespace()) {
            return Err(Error::Config("alphabet must not contain whitespace".into()));
        }
        Ok(chars)
    }

    /// Embedding dimension the scheme produces.
    pub fn dim(&self) -> Result<usize> {
        let a = self.alphabet()?.len();
        let dim = match self.scheme {
            Scheme::PositionalOnehot => self.length.max.checked_mul(a).and_then(|d| d.checked_add(1)),
            Scheme::CharBag { max_n } => {
                if max_n == 0 {
                    return Err(Error::Config("char_bag needs max_n >= 1".into()));
                }
                (1..=max_n).try_fold(0usize, |acc, n| {
                    a.checked_pow(n as u32).and_then(|p| acc.checked_add(p))
                })
            }
            Scheme::Gaussian { dim, .. } => Some(dim),
        };
        match dim {
            Some(d) if d > 0 && d <= MAX_DIM => Ok(d),
            _ => Err(Error::Config(format!(
                "scheme {:?} over {a} characters gives an unusable dimension",
                self.scheme
            ))),
        }
    }
}

/// Draws `vocab_size` unique strings. Depends only on the alphabet, the
/// length distribution, the size and the seed, so tables generated with
/// different schemes share their vocabulary.
pub fn generate_strings(spec: &SyntheticSpec) -> Result<Vec<String>> {
    let alphabet = spec.alphabet()?;
    let LengthDistribution { min, max, ref weights } = spec.length;
    if min == 0 || max < min {
        return Err(Error::Config(format!("bad length range {min}..={max}")));
    }
    let n_lengths = max - min + 1;
    let mut weights = match weights {
        Some(w) if w.len() != n_lengths => {
            return Err(Error::Config(format!(
                "{} length weights for {n_lengths} lengths",
                w.len()
            )))
        }
        Some(w) if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => {
            return Err(Error::Config("length weights must be finite and non-negative".into()))
        }
        Some(w) => w.clone(),
        None => vec![1.0; n_lengths],
    };
    let capacity: Vec<usize> = (min..=max)
        .map(|l| alphabet.len().checked_pow(l as u32).unwrap_or(usize::MAX))
        .collect();
    let reachable: usize = capacity
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .fold(0usize, |acc, (&c, _)| acc.saturating_add(c));
    if reachable < spec.vocab_size {
        return Err(Error::Config(format!(
            "only {reachable} distinct strings exist, {} requested",
            spec.vocab_size
        )));
    }

    let mut rng = seed::rng(seed::derive_seed(spec.seed, "strings", &[]));
    let mut seen = HashSet::with_capacity(spec.vocab_size);
    let mut out = Vec::with_capacity(spec.vocab_size);
    let mut per_length = vec![0usize; n_lengths];
    let mut dist = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
    let mut buf = String::new();
    while out.len() < spec.vocab_size {
        let li = dist.sample(&mut rng);
        buf.clear();
        for _ in 0..min + li {
            buf.push(alphabet[rng.gen_range(0..alphabet.len())]);
        }
        if seen.insert(buf.clone()) {
            out.push(buf.clone());
            per_length[li] += 1;
            if per_length[li] == capacity[li] {
                weights[li] = 0.0;
                if out.len() < spec.vocab_size {
                    dist = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
                }
            }
        }
    }
    Ok(out)
}

/// Builds the embedding table described by `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<EmbeddingTable<f64>> {
    let alphabet = spec.alphabet()?;
    let dim = spec.dim()?;
    let strings = generate_strings(spec)?;
    let mut vectors = vec![0.0; strings.len() * dim];
    let char_index = |c: char| alphabet.iter().position(|&a| a == c).unwrap();

    match spec.scheme {
        Scheme::PositionalOnehot => {
            let a = alphabet.len();
            let max = spec.length.max;
            for (row, s) in vectors.chunks_mut(dim).zip(&strings) {
                let mut len = 0;
                for (pos, c) in s.chars().enumerate() {
                    row[pos * a + char_index(c)] = 1.0;
                    len += 1;
                }
                row[dim - 1] = len as f64 / max as f64;
            }
        }
        Scheme::CharBag { max_n } => {
            let a = alphabet.len();
            for (row, s) in vectors.chunks_mut(dim).zip(&strings) {
                let idx: Vec<usize> = s.chars().map(char_index).collect();
                let mut offset = 0;
                for n in 1..=max_n {
                    for gram in idx.windows(n) {
                        let code = gram.iter().fold(0, |acc, &d| acc * a + d);
                        row[offset + code] += 1.0;
                    }
                    offset += a.pow(n as u32);
                }
            }
        }
        Scheme::Gaussian { sigma, .. } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
            let mut rng = seed::rng(seed::derive_seed(spec.seed, "vectors", &[]));
            for v in vectors.iter_mut() {
                *v = normal.sample(&mut rng);
            }
        }
    }
    let tokens = strings.iter().map(|s| Token::plain(s)).collect();
    EmbeddingTable::new(tokens, vectors, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(alphabet: &str, size: usize, min: usize, max: usize, scheme: Scheme) -> SyntheticSpec {
        SyntheticSpec {
            alphabet: alphabet.into(),
            vocab_size: size,
            length: LengthDistribution { min, max, weights: None },
            scheme,
            seed: 42,
        }
    }

    fn decode_positional(row: &[f64], alphabet: &[char], max: usize) -> String {
        let a = alphabet.len();
        let len = (row[row.len() - 1] * max as f64).round() as usize;
        (0..len)
            .map(|p| {
                let block = &row[p * a..(p + 1) * a];
                alphabet[block.iter().position(|&v| v == 1.0).unwrap()]
            })
            .collect()
    }

    #[test]
    fn positional_onehot_of_ab() {
        let t = generate(&spec("ab", 6, 1, 2, Scheme::PositionalOnehot)).unwrap();
        let id = t.id_of("ab").unwrap();
        assert_eq!(t.vector(id), &[1.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn positional_onehot_decodes_every_string() {
        let s = spec("xyz", 100, 1, 6, Scheme::PositionalOnehot);
        let t = generate(&s).unwrap();
        let alphabet: Vec<char> = "xyz".chars().collect();
        let mut seen = HashSet::new();
        for (i, tok) in t.tokens().iter().enumerate() {
            assert_eq!(decode_positional(t.vector(i), &alphabet, 6), tok.surface);
            let key: Vec<u64> = t.vector(i).iter().map(|v| v.to_bits()).collect();
            assert!(seen.insert(key), "two strings share a vector");
        }
    }

    #[test]
    fn char_bag_unigrams() {
        let t = generate(&spec("ab", 14, 1, 3, Scheme::CharBag { max_n: 1 })).unwrap();
        let id = t.id_of("aab").unwrap();
        assert_eq!(t.vector(id), &[2.0, 1.0]);
    }

    #[test]
    fn char_bag_trigram_layout() {
        let t = generate(&spec("ab", 14, 1, 3, Scheme::CharBag { max_n: 3 })).unwrap();
        assert_eq!(t.dim(), 2 + 4 + 8);
        let v = t.vector(t.id_of("aba").unwrap());
        // unigrams a:2 b:1 | bigrams aa ab ba bb | trigrams aaa..bbb
        assert_eq!(&v[..2], &[2.0, 1.0]);
        assert_eq!(&v[2..6], &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(v[6 + 0b010], 1.0);
        assert_eq!(v[6..].iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn strings_are_unique_and_shared_across_schemes() {
        let a = generate_strings(&spec("abc", 200, 1, 8, Scheme::PositionalOnehot)).unwrap();
        let b = generate_strings(&spec("abc", 200, 1, 8, Scheme::Gaussian { sigma: 1.0, dim: 4 })).unwrap();
        assert_eq!(a, b);
        let unique: HashSet<&String> = a.iter().collect();
        assert_eq!(unique.len(), 200);
        assert!(a.iter().all(|s| (1..=8).contains(&s.chars().count())));
    }

    #[test]
    fn small_lengths_saturate_without_stalling() {
        let s = spec("ab", 2 + 4 + 8, 1, 3, Scheme::PositionalOnehot);
        assert_eq!(generate_strings(&s).unwrap().len(), 14);
        let s = spec("ab", 15, 1, 3, Scheme::PositionalOnehot);
        assert!(generate_strings(&s).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let s = spec("abcd", 50, 1, 5, Scheme::Gaussian { sigma: 0.5, dim: 3 });
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let mut other = s.clone();
        other.seed += 1;
        assert_ne!(generate(&s).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn gaussian_carries_no_length_signal() {
        let letters: String = ('a'..='z').collect();
        let s = spec(&letters, 2000, 1, 10, Scheme::Gaussian { sigma: 1.0, dim: 16 });
        let t = generate(&s).unwrap();
        let lens: Vec<f64> = t.tokens().iter().map(|t| t.len_chars() as f64).collect();
        let n = lens.len() as f64;
        let ml = lens.iter().sum::<f64>() / n;
        for d in 0..t.dim() {
            let col: Vec<f64> = (0..t.len()).map(|i| t.vector(i)[d]).collect();
            let mc = col.iter().sum::<f64>() / n;
            let cov: f64 = lens.iter().zip(&col).map(|(l, c)| (l - ml) * (c - mc)).sum();
            let vl: f64 = lens.iter().map(|l| (l - ml).powi(2)).sum();
            let vc: f64 = col.iter().map(|c| (c - mc).powi(2)).sum();
            let r = cov / (vl * vc).sqrt();
            assert!(r.abs() < 0.1, "coordinate {d}: r = {r}");
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&spec("", 1, 1, 2, Scheme::PositionalOnehot)).is_err());
        assert!(generate(&spec("aa", 1, 1, 2, Scheme::PositionalOnehot)).is_err());
        assert!(generate(&spec("ab", 1, 0, 2, Scheme::PositionalOnehot)).is_err());
        assert!(generate(&spec("ab", 1, 1, 2, Scheme::CharBag { max_n: 0 })).is_err());
        assert!(generate(&spec("ab", 1, 1, 2, Scheme::Gaussian { sigma: 1.0, dim: 0 })).is_err());
        let letters: String = ('a'..='z').collect();
        assert!(generate(&spec(&letters, 10, 1, 5, Scheme::CharBag { max_n: 5 })).is_err());
    }
}
