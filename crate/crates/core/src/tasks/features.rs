use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::probe::{ExampleSet, InputLayout, Inputs, Targets};
use crate::scalar::Scalar;

use super::dataset::{Label, ProbeExample};

/// Non-zero components of every table row.
#[derive(Debug, Clone)]
struct SparseRows<T> {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseRows<T> {
    fn new(table: &EmbeddingTable<T>) -> Self {
        let mut rows = SparseRows {
            indptr: Vec::with_capacity(table.len() + 1),
            indices: Vec::new(),
            values: Vec::new(),
        };
        rows.indptr.push(0);
        for id in 0..table.len() {
            for (j, &v) in table.vector(id).iter().enumerate() {
                if !v.is_zero() {
                    rows.indices.push(j);
                    rows.values.push(v);
                }
            }
            rows.indptr.push(rows.indices.len());
        }
        rows
    }

    fn row(&self, id: usize) -> (&[usize], &[T]) {
        let span = self.indptr[id]..self.indptr[id + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    fn zero_fraction(&self, total: usize) -> f64 {
        if total == 0 {
            0.0
        } else {
            1.0 - self.values.len() as f64 / total as f64
        }
    }
}

/// Probe examples backed by frozen rows of an embedding table.
///
/// Substring examples are fed as the word vector followed by the candidate
/// vector.
#[derive(Debug, Clone)]
pub struct TableExamples<'a, T> {
    table: &'a EmbeddingTable<T>,
    examples: &'a [ProbeExample],
    pairs: bool,
    layout: InputLayout,
    sparse: Option<SparseRows<T>>,
}

impl<'a, T: Scalar> TableExamples<'a, T> {
    pub fn new(table: &'a EmbeddingTable<T>, examples: &'a [ProbeExample]) -> Result<Self> {
        let pairs = examples.first().is_some_and(|e| e.sub.is_some());
        if examples.iter().any(|e| e.sub.is_some() != pairs) {
            return Err(Error::Validation("mixed single and pair examples".into()));
        }
        if let Some(bad) = examples
            .iter()
            .find(|e| e.word >= table.len() || e.sub.is_some_and(|s| s >= table.len()))
        {
            return Err(Error::Validation(format!("example {bad:?} refers past the table")));
        }
        let sparse = SparseRows::new(table);
        let layout = InputLayout::for_sparsity(sparse.zero_fraction(table.matrix().len()));
        Ok(TableExamples {
            table,
            examples,
            pairs,
            layout,
            sparse: (layout == InputLayout::Sparse).then_some(sparse),
        })
    }

    pub fn with_layout(mut self, layout: InputLayout) -> Self {
        self.layout = layout;
        if layout == InputLayout::Sparse && self.sparse.is_none() {
            self.sparse = Some(SparseRows::new(self.table));
        }
        self
    }

    pub fn examples(&self) -> &'a [ProbeExample] {
        self.examples
    }
}

impl<T: Scalar> ExampleSet<T> for TableExamples<'_, T> {
    fn len(&self) -> usize {
        self.examples.len()
    }

    fn input_dim(&self) -> usize {
        if self.pairs {
            2 * self.table.dim()
        } else {
            self.table.dim()
        }
    }

    fn layout(&self) -> InputLayout {
        self.layout
    }

    fn gather(&self, ids: &[usize], inputs: &mut Inputs<T>, targets: &mut Targets<T>) -> Result<()> {
        for &i in ids {
            let ex = &self.examples[i];
            match (&self.sparse, ex.sub) {
                (Some(rows), sub) => {
                    let d = self.table.dim();
                    let (wi, wv) = rows.row(ex.word);
                    match sub {
                        Some(t) => {
                            let (ti, tv) = rows.row(t);
                            inputs.push_sparse_parts(&[(d, wi, wv), (d, ti, tv)]);
                        }
                        None => inputs.push_sparse_parts(&[(d, wi, wv)]),
                    }
                }
                (None, Some(t)) => inputs.push_concat(&[self.table.vector(ex.word), self.table.vector(t)]),
                (None, None) => inputs.push_row(self.table.vector(ex.word)),
            }
            match (ex.label, &mut *targets) {
                (Label::Length(n), Targets::Real(v)) => v.push(T::from_u32(n).unwrap()),
                (Label::IsSubstring(b), Targets::Binary(v)) => v.push(b),
                (Label::Char(c), Targets::Class(v)) => v.push(c),
                _ => return Err(Error::Label("example label does not match the head".into())),
            }
        }
        Ok(())
    }
}
