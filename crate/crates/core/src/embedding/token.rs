use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a stripped prefix marker says about the token's position in a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    /// Marks a word-internal piece, e.g. WordPiece `##`.
    Continuation,
    /// Marks the start of a word, e.g. SentencePiece `\u{2581}`.
    WordInitial,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripRule {
    pub marker: String,
    pub kind: MarkerKind,
}

impl StripRule {
    pub fn new(marker: impl Into<String>, kind: MarkerKind) -> Self {
        StripRule {
            marker: marker.into(),
            kind,
        }
    }

    /// `##` continuation and U+2581 word-initial.
    pub fn defaults() -> Vec<StripRule> {
        vec![
            StripRule::new("##", MarkerKind::Continuation),
            StripRule::new("\u{2581}", MarkerKind::WordInitial),
        ]
    }
}

/// Tokens removed from a vocabulary before any probing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusions {
    #[serde(default = "Exclusions::default_tokens")]
    pub tokens: Vec<String>,
    /// Drop byte-fallback tokens of the form `<0xHH>`.
    #[serde(default = "default_true")]
    pub byte_fallback: bool,
}

fn default_true() -> bool {
    true
}

impl Default for Exclusions {
    fn default() -> Self {
        Exclusions {
            tokens: Self::default_tokens(),
            byte_fallback: true,
        }
    }
}

impl Exclusions {
    pub fn none() -> Self {
        Exclusions {
            tokens: Vec::new(),
            byte_fallback: false,
        }
    }

    fn default_tokens() -> Vec<String> {
        ["<unk>", "<s>", "</s>", "[CLS]", "[SEP]", "[PAD]", "[MASK]"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    pub fn is_excluded(&self, raw: &str) -> bool {
        self.tokens.iter().any(|t| t == raw) || (self.byte_fallback && is_byte_fallback(raw))
    }
}

/// `<0xHH>` with two hex digits.
pub fn is_byte_fallback(raw: &str) -> bool {
    let b = raw.as_bytes();
    b.len() == 6
        && raw.starts_with("<0x")
        && b[5] == b'>'
        && b[3].is_ascii_hexdigit()
        && b[4].is_ascii_hexdigit()
}

/// A vocabulary entry together with the string whose characters are counted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub raw: String,
    pub surface: String,
    pub word_initial: bool,
}

impl Token {
    pub fn new(raw: &str, rules: &[StripRule]) -> Result<Token> {
        let (surface, word_initial) = normalize_surface(raw, rules)?;
        Ok(Token {
            raw: raw.to_string(),
            surface,
            word_initial,
        })
    }

    /// A token carrying no marker at all.
    pub fn plain(s: &str) -> Token {
        Token {
            raw: s.to_string(),
            surface: s.to_string(),
            word_initial: true,
        }
    }

    /// Length in Unicode scalar values.
    pub fn len_chars(&self) -> usize {
        self.surface.chars().count()
    }

    pub fn has_marker(&self) -> bool {
        self.raw != self.surface
    }
}

/// Strips configured prefix markers from `raw`.
///
/// Rules are applied in order, each removing at most one leading occurrence
/// of its marker. The last rule that fired decides `word_initial`; without
/// any marker the token counts as word-initial.
pub fn normalize_surface(raw: &str, rules: &[StripRule]) -> Result<(String, bool)> {
    if raw.is_empty() {
        return Err(Error::Validation("empty token".into()));
    }
    let mut surface = raw;
    let mut word_initial = true;
    for rule in rules {
        if rule.marker.is_empty() {
            continue;
        }
        if let Some(rest) = surface.strip_prefix(rule.marker.as_str()) {
            surface = rest;
            word_initial = rule.kind == MarkerKind::WordInitial;
        }
    }
    if surface.is_empty() {
        return Err(Error::Validation(format!(
            "token {raw:?} consists only of a prefix marker"
        )));
    }
    Ok((surface.to_string(), word_initial))
}
