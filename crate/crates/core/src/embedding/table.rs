use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::token::Token;

/// Counts of vocabulary entries dropped while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub excluded_special: usize,
    pub marker_only: usize,
}

/// An ordered vocabulary with one dense embedding row per token.
#[derive(Debug, Clone)]
pub struct EmbeddingTable<T> {
    tokens: Vec<Token>,
    vectors: Vec<T>,
    dim: usize,
    index: HashMap<String, usize>,
    summary: LoadSummary,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Builds a table from tokens and a row-major `tokens.len() x dim` matrix.
    pub fn new(tokens: Vec<Token>, vectors: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("embedding dimension must be positive".into()));
        }
        if vectors.len() != tokens.len() * dim {
            return Err(Error::Shape(format!(
                "{} tokens x dim {} needs {} values, got {}",
                tokens.len(),
                dim,
                tokens.len() * dim,
                vectors.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.surface.is_empty() {
                return Err(Error::Validation(format!("token {:?} has an empty surface", tok.raw)));
            }
            if index.insert(tok.raw.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate token {:?}", tok.raw)));
            }
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value in the vector of {:?}",
                tokens[pos / dim].raw
            )));
        }
        Ok(EmbeddingTable {
            tokens,
            vectors,
            dim,
            index,
            summary: LoadSummary::default(),
        })
    }

    pub(crate) fn with_summary(mut self, summary: LoadSummary) -> Self {
        self.summary = summary;
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id]
    }

    pub fn vector(&self, id: usize) -> &[T] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    /// The whole row-major matrix.
    pub fn matrix(&self) -> &[T] {
        &self.vectors
    }

    pub fn id_of(&self, raw: &str) -> Option<usize> {
        self.index.get(raw).copied()
    }

    pub fn summary(&self) -> LoadSummary {
        self.summary
    }

    /// Keeps the first `n` rows; embedding files are usually frequency ordered.
    pub fn truncate(&mut self, n: usize) {
        if n >= self.tokens.len() {
            return;
        }
        for tok in self.tokens.drain(n..) {
            self.index.remove(&tok.raw);
        }
        self.vectors.truncate(n * self.dim);
    }

    /// Fraction of exactly-zero components.
    pub fn sparsity(&self) -> f64 {
        if self.vectors.is_empty() {
            return 0.0;
        }
        let zeros = self.vectors.iter().filter(|v| v.is_zero()).count();
        zeros as f64 / self.vectors.len() as f64
    }

    /// Converts every component to another precision.
    pub fn cast<U: Scalar>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            tokens: self.tokens.clone(),
            vectors: self
                .vectors
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
            dim: self.dim,
            index: self.index.clone(),
            summary: self.summary,
        }
    }
}

impl<T: PartialEq> PartialEq for EmbeddingTable<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.tokens == other.tokens && self.vectors == other.vectors
    }
}
