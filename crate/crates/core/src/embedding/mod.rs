//! Vocabularies, embedding tables and their interchange formats.

mod chars;
mod io;
mod table;
mod token;

pub use chars::CharSubset;
pub use io::{
    load_jsonl, load_word2vec_text, read_jsonl, read_word2vec_text, save_jsonl, write_jsonl,
    LoadOptions,
};
pub use table::{EmbeddingTable, LoadSummary};
pub use token::{is_byte_fallback, normalize_surface, Exclusions, MarkerKind, StripRule, Token};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingFormat {
    Jsonl,
    Word2vec,
}

pub fn load<T: Scalar>(
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
    opts: &LoadOptions,
) -> Result<EmbeddingTable<T>> {
    match format {
        EmbeddingFormat::Jsonl => load_jsonl(path, opts),
        EmbeddingFormat::Word2vec => load_word2vec_text(path, opts),
    }
}
