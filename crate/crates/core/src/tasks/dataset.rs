use serde::{Deserialize, Serialize};

use crate::embedding::{CharSubset, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which end of the token the constitution probe counts positions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "task")]
pub enum TaskKind {
    Length,
    Substring,
    Constitution { position: usize, direction: Direction },
}

impl TaskKind {
    pub fn tag(&self) -> String {
        match self {
            TaskKind::Length => "length".into(),
            TaskKind::Substring => "substring".into(),
            TaskKind::Constitution { position, direction } => {
                format!("constitution/{}/{}", direction.as_str(), position)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Length(u32),
    IsSubstring(bool),
    /// Class id into a [`CharSubset`].
    Char(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeExample {
    /// The word (or subword) whose embedding is probed.
    pub word: usize,
    /// The candidate substring token, substring task only.
    pub sub: Option<usize>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDataset {
    pub task: TaskKind,
    pub examples: Vec<ProbeExample>,
    /// Tokens left out because no label could be assigned.
    pub dropped: usize,
}

impl ProbeDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Examples whose word falls on the requested side of the split.
    pub fn select(&self, mut keep: impl FnMut(&ProbeExample) -> bool) -> Vec<ProbeExample> {
        self.examples.iter().copied().filter(|e| keep(e)).collect()
    }
}

/// One example per token, labelled with its surface length in code points.
pub fn build_length_dataset<T: Scalar>(table: &EmbeddingTable<T>) -> ProbeDataset {
    let examples = table
        .tokens()
        .iter()
        .enumerate()
        .map(|(id, tok)| ProbeExample {
            word: id,
            sub: None,
            label: Label::Length(tok.len_chars() as u32),
        })
        .collect();
    ProbeDataset {
        task: TaskKind::Length,
        examples,
        dropped: 0,
    }
}

/// The character at 1-based `position`, counted from either end.
pub fn char_at(surface: &str, position: usize, direction: Direction) -> Option<char> {
    if position == 0 {
        return None;
    }
    match direction {
        Direction::Forward => surface.chars().nth(position - 1),
        Direction::Backward => surface.chars().rev().nth(position - 1),
    }
}

/// One example per token long enough to have a `position`-th character,
/// labelled with that character's class in `chars`.
///
/// Tokens whose target character has no single-character token are dropped
/// and counted in [`ProbeDataset::dropped`].
pub fn build_constitution_dataset<T: Scalar>(
    table: &EmbeddingTable<T>,
    chars: &CharSubset,
    position: usize,
    direction: Direction,
) -> Result<ProbeDataset> {
    if position == 0 {
        return Err(Error::Config("character positions start at 1".into()));
    }
    let mut examples = Vec::new();
    let mut dropped = 0;
    for (id, tok) in table.tokens().iter().enumerate() {
        let Some(c) = char_at(&tok.surface, position, direction) else {
            continue;
        };
        match chars.class_of(c) {
            Some(class) => examples.push(ProbeExample {
                word: id,
                sub: None,
                label: Label::Char(class),
            }),
            None => dropped += 1,
        }
    }
    if examples.is_empty() {
        return Err(Error::Validation(format!(
            "no tokens with a known character at {} position {position}",
            direction.as_str()
        )));
    }
    Ok(ProbeDataset {
        task: TaskKind::Constitution {
            position,
            direction,
        },
        examples,
        dropped,
    })
}
