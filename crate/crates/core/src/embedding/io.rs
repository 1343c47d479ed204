//! Readers and writers for embedding interchange files.
//!
//! Two formats are supported:
//!
//! 1. word2vec/GloVe text: an optional `count dim` header line followed by
//!    one `token v1 ... vdim` line per entry.
//! 2. JSONL: one `{"token": ..., "vector": [...]}` object per line. Floats
//!    are written in shortest round-trip form, so saving and reloading a
//!    table reproduces it exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::table::{EmbeddingTable, LoadSummary};
use super::token::{normalize_surface, Exclusions, StripRule, Token};

/// How raw vocabulary entries are filtered and normalized on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadOptions {
    #[serde(default = "StripRule::defaults")]
    pub strip_rules: Vec<StripRule>,
    #[serde(default)]
    pub exclusions: Exclusions,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            strip_rules: StripRule::defaults(),
            exclusions: Exclusions::default(),
        }
    }
}

/// Accumulates admitted rows and drop counts while reading a file.
struct Collector<T> {
    opts: LoadOptions,
    tokens: Vec<Token>,
    vectors: Vec<T>,
    dim: Option<usize>,
    summary: LoadSummary,
}

impl<T: Scalar> Collector<T> {
    fn new(opts: &LoadOptions) -> Self {
        Collector {
            opts: opts.clone(),
            tokens: Vec::new(),
            vectors: Vec::new(),
            dim: None,
            summary: LoadSummary::default(),
        }
    }

    fn push(&mut self, line: usize, raw: &str, values: &[f64]) -> Result<()> {
        match self.dim {
            None => self.dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Validation(format!(
                    "line {line}: vector for {raw:?} has {} components, expected {d}",
                    values.len()
                )))
            }
            Some(_) => {}
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "line {line}: non-finite value {v} for {raw:?}"
            )));
        }
        if self.opts.exclusions.is_excluded(raw) {
            self.summary.excluded_special += 1;
            return Ok(());
        }
        let (surface, word_initial) = match normalize_surface(raw, &self.opts.strip_rules) {
            Ok(n) => n,
            Err(_) if !raw.is_empty() => {
                self.summary.marker_only += 1;
                return Ok(());
            }
            Err(e) => return Err(Error::Parse { line, message: e.to_string() }),
        };
        self.tokens.push(Token {
            raw: raw.to_string(),
            surface,
            word_initial,
        });
        self.vectors.extend(values.iter().map(|&v| T::from_f64_lossy(v)));
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingTable<T>> {
        let dim = self
            .dim
            .ok_or_else(|| Error::Validation("no embedding rows found".into()))?;
        Ok(EmbeddingTable::new(self.tokens, self.vectors, dim)?.with_summary(self.summary))
    }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|s| !s.is_empty())
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let parts: Vec<&str> = fields(line).collect();
    match parts.as_slice() {
        [count, dim] => Some((count.parse().ok()?, dim.parse().ok()?)),
        _ => None,
    }
}

/// Reads the word2vec/GloVe text format from a buffered reader.
pub fn read_word2vec_text<T: Scalar, R: BufRead>(
    reader: R,
    opts: &LoadOptions,
) -> Result<EmbeddingTable<T>> {
    let mut collector = Collector::new(opts);
    let mut header: Option<(usize, usize)> = None;
    let mut rows = 0usize;
    let mut values = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if rows == 0 && header.is_none() && collector.dim.is_none() {
            if let Some(h) = parse_header(line) {
                header = Some(h);
                collector.dim = Some(h.1);
                continue;
            }
        }
        let mut parts = fields(line);
        let raw = parts.next().ok_or_else(|| Error::Parse {
            line: lineno,
            message: "missing token".into(),
        })?;
        values.clear();
        for p in parts {
            let v: f64 = p.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("cannot parse {p:?} as a number"),
            })?;
            values.push(v);
        }
        if let Some(d) = collector.dim {
            if values.len() != d {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {} columns, found {}", d + 1, values.len() + 1),
                });
            }
        }
        if values.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "token without vector components".into(),
            });
        }
        collector.push(lineno, raw, &values)?;
        rows += 1;
    }

    if let Some((count, _)) = header {
        if count != rows {
            return Err(Error::Validation(format!(
                "header declares {count} rows, file has {rows}"
            )));
        }
    }
    collector.finish()
}

pub fn load_word2vec_text<T: Scalar>(
    path: impl AsRef<Path>,
    opts: &LoadOptions,
) -> Result<EmbeddingTable<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_word2vec_text(BufReader::new(file), opts)
        .map_err(|e| e.context(format!("reading {}", path.display())))
}

#[derive(Deserialize)]
struct JsonRow {
    token: String,
    vector: Vec<f64>,
}

#[derive(Serialize)]
struct JsonRowRef<'a> {
    token: &'a str,
    vector: Vec<f64>,
}

/// Reads the JSONL interchange format from a buffered reader.
pub fn read_jsonl<T: Scalar, R: BufRead>(reader: R, opts: &LoadOptions) -> Result<EmbeddingTable<T>> {
    let mut collector = Collector::new(opts);
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if row.vector.is_empty() {
            return Err(Error::Validation(format!("line {lineno}: empty vector")));
        }
        collector.push(lineno, &row.token, &row.vector)?;
    }
    collector.finish()
}

pub fn load_jsonl<T: Scalar>(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<EmbeddingTable<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file), opts).map_err(|e| e.context(format!("reading {}", path.display())))
}

pub fn write_jsonl<T: Scalar, W: Write>(table: &EmbeddingTable<T>, mut writer: W) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Validation("refusing to write an empty table".into()));
    }
    for (i, tok) in table.tokens().iter().enumerate() {
        let row = JsonRowRef {
            token: &tok.raw,
            vector: table.vector(i).iter().map(|v| v.to_f64_lossy()).collect(),
        };
        serde_json::to_writer(&mut writer, &row)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub fn save_jsonl<T: Scalar>(table: &EmbeddingTable<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if table.is_empty() {
        return Err(Error::Validation("refusing to write an empty table".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_jsonl(table, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w2v(text: &str) -> Result<EmbeddingTable<f64>> {
        read_word2vec_text(text.as_bytes(), &LoadOptions::default())
    }

    fn jsonl(text: &str) -> Result<EmbeddingTable<f64>> {
        read_jsonl(text.as_bytes(), &LoadOptions::default())
    }

    #[test]
    fn minimal_word2vec_file() {
        let t = w2v("2 3\na 1 0 0\nb 0 1 0\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert_eq!(t.vector(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn headerless_glove_file() {
        let t = w2v("the 0.1 0.2\nof -0.3 0.4\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 2);
    }

    #[test]
    fn continuation_marker_is_stripped() {
        let t = w2v("##string 0.1 0.2\n").unwrap();
        assert_eq!(t.token(0).raw, "##string");
        assert_eq!(t.token(0).surface, "string");
        assert!(!t.token(0).word_initial);
    }

    #[test]
    fn special_tokens_are_dropped() {
        let t = w2v("<unk> 0 0\n<0x0A> 1 1\nword 1 2\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.id_of("<unk>"), None);
        assert_eq!(t.summary().excluded_special, 2);
    }

    #[test]
    fn marker_only_tokens_are_dropped() {
        let t = w2v("## 0 0\nword 1 2\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.summary().marker_only, 1);
    }

    #[test]
    fn wrong_column_count_reports_line() {
        match w2v("2 3\na 1 0 0\nb 0 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match w2v("a 1 0 0\nb 0 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_and_duplicates_are_rejected() {
        assert!(matches!(w2v("a 1 NaN\n"), Err(Error::Validation(_))));
        assert!(matches!(w2v("a 1 inf\n"), Err(Error::Validation(_))));
        assert!(matches!(w2v("a 1 2\na 3 4\n"), Err(Error::Validation(_))));
    }

    #[test]
    fn header_count_must_match() {
        assert!(w2v("3 1\na 1\nb 2\n").is_err());
    }

    #[test]
    fn jsonl_single_row() {
        let t = jsonl("{\"token\":\"word\",\"vector\":[0,1]}\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.dim(), 2);
    }

    #[test]
    fn jsonl_inconsistent_dims() {
        let r = jsonl("{\"token\":\"a\",\"vector\":[0,1]}\n{\"token\":\"b\",\"vector\":[0,1,2]}\n");
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn jsonl_empty_file() {
        assert!(matches!(jsonl(""), Err(Error::Validation(_))));
    }

    #[test]
    fn jsonl_word_initial_marker() {
        let t = jsonl("{\"token\":\"\u{2581}Wu\",\"vector\":[1]}\n").unwrap();
        assert_eq!(t.token(0).surface, "Wu");
        assert!(t.token(0).word_initial);
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let tokens = vec![Token::plain("x"), Token::new("##y", &StripRule::defaults()).unwrap()];
        let vals = vec![0.1, 1.0 / 3.0, -2.5e-300, 1.7976931348623157e308];
        let t = EmbeddingTable::new(tokens, vals, 2).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&t, &mut buf).unwrap();
        let back: EmbeddingTable<f64> = read_jsonl(buf.as_slice(), &LoadOptions::default()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn save_empty_table_fails() {
        let t = EmbeddingTable::<f64>::new(vec![], vec![], 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(save_jsonl(&t, dir.path().join("e.jsonl")).is_err());
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let t = EmbeddingTable::new(vec![Token::plain("a")], vec![1.0f64], 1).unwrap();
        let r = save_jsonl(&t, "/nonexistent-dir/x/y.jsonl");
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
