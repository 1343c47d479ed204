use std::io::Write;

use serde::Serialize;

use crate::embedding::{CharSubset, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::dataset::{Label, ProbeDataset};

#[derive(Serialize)]
#[serde(untagged)]
enum LabelValue {
    Length(u32),
    Flag(bool),
    Char(String),
}

#[derive(Serialize)]
struct Row<'a> {
    w: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<&'a str>,
    label: LabelValue,
}

/// Writes one `{"w", "t"?, "label"}` object per example, raw token strings
/// included. Character labels are written as the character itself.
pub fn write_dataset_jsonl<T: Scalar, W: Write>(
    dataset: &ProbeDataset,
    table: &EmbeddingTable<T>,
    chars: Option<&CharSubset>,
    mut out: W,
) -> Result<()> {
    for ex in &dataset.examples {
        let label = match ex.label {
            Label::Length(n) => LabelValue::Length(n),
            Label::IsSubstring(b) => LabelValue::Flag(b),
            Label::Char(c) => {
                let chars = chars.ok_or_else(|| {
                    Error::Config("character labels need the character subset".into())
                })?;
                LabelValue::Char(chars.char_of(c).to_string())
            }
        };
        let row = Row {
            w: &table.token(ex.word).raw,
            t: ex.sub.map(|t| table.token(t).raw.as_str()),
            label,
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}
