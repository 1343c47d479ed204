use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::table::EmbeddingTable;

/// The single-character tokens of a table, used as the tied decoder of the
/// constitution probe.
///
/// Entries are sorted by character; a character's position in this list is
/// its class id. When several raw tokens share a one-character surface the
/// unmarked one wins, then the lowest vocabulary index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharSubset {
    entries: Vec<(usize, char)>,
    by_char: BTreeMap<char, usize>,
}

impl CharSubset {
    pub fn from_table<T: Scalar>(table: &EmbeddingTable<T>) -> Result<Self> {
        let mut best: BTreeMap<char, usize> = BTreeMap::new();
        for (id, tok) in table.tokens().iter().enumerate() {
            let mut chars = tok.surface.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                continue;
            };
            match best.get(&c) {
                None => {
                    best.insert(c, id);
                }
                Some(&cur) => {
                    let incumbent = table.token(cur);
                    // unmarked beats marked; ids are visited in increasing order
                    if incumbent.has_marker() && !tok.has_marker() {
                        best.insert(c, id);
                    }
                }
            }
        }
        if best.is_empty() {
            return Err(Error::Validation(
                "vocabulary has no single-character tokens".into(),
            ));
        }
        let entries: Vec<(usize, char)> = best.iter().map(|(&c, &id)| (id, c)).collect();
        let by_char = entries
            .iter()
            .enumerate()
            .map(|(cls, &(_, c))| (c, cls))
            .collect();
        Ok(CharSubset { entries, by_char })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(token id, character)` pairs in class-id order.
    pub fn entries(&self) -> &[(usize, char)] {
        &self.entries
    }

    pub fn class_of(&self, c: char) -> Option<usize> {
        self.by_char.get(&c).copied()
    }

    pub fn char_of(&self, class: usize) -> char {
        self.entries[class].1
    }

    pub fn token_of(&self, class: usize) -> usize {
        self.entries[class].0
    }

    /// Row-major `len() x dim` matrix of the characters' embeddings.
    pub fn vectors<T: Scalar>(&self, table: &EmbeddingTable<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(self.entries.len() * table.dim());
        for &(id, _) in &self.entries {
            out.extend_from_slice(table.vector(id));
        }
        out
    }
}
