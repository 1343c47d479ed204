use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Storage layout of an input batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputLayout {
    Dense,
    /// Compressed rows; only non-zero components are stored. The first
    /// layer then touches only the weight rows of active features.
    Sparse,
}

impl InputLayout {
    /// Sparse storage pays off once most components are zero.
    pub fn for_sparsity(zero_fraction: f64) -> Self {
        if zero_fraction >= 0.75 {
            InputLayout::Sparse
        } else {
            InputLayout::Dense
        }
    }
}

/// A batch of probe inputs, one row per example.
#[derive(Debug, Clone)]
pub struct Inputs<T> {
    layout: InputLayout,
    cols: usize,
    rows: usize,
    dense: Vec<T>,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Inputs<T> {
    pub fn new(layout: InputLayout, cols: usize) -> Self {
        Inputs {
            layout,
            cols,
            rows: 0,
            dense: Vec::new(),
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Wraps a row-major dense matrix.
    pub fn from_dense(cols: usize, data: Vec<T>) -> Result<Self> {
        if cols == 0 || !data.len().is_multiple_of(cols) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of width {cols}",
                data.len()
            )));
        }
        let rows = data.len() / cols;
        Ok(Inputs {
            layout: InputLayout::Dense,
            cols,
            rows,
            dense: data,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn clear(&mut self) {
        self.rows = 0;
        self.dense.clear();
        self.indptr.truncate(1);
        self.indices.clear();
        self.values.clear();
    }

    /// Appends one example formed by concatenating `parts`.
    pub fn push_concat(&mut self, parts: &[&[T]]) {
        debug_assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), self.cols);
        match self.layout {
            InputLayout::Dense => {
                for p in parts {
                    self.dense.extend_from_slice(p);
                }
            }
            InputLayout::Sparse => {
                let mut offset = 0;
                for p in parts {
                    for (j, &v) in p.iter().enumerate() {
                        if !v.is_zero() {
                            self.indices.push(offset + j);
                            self.values.push(v);
                        }
                    }
                    offset += p.len();
                }
                self.indptr.push(self.indices.len());
            }
        }
        self.rows += 1;
    }

    /// Appends one example from parts that are already sparse, each given
    /// as `(width, indices, values)` with indices local to the part.
    pub fn push_sparse_parts(&mut self, parts: &[(usize, &[usize], &[T])]) {
        debug_assert_eq!(parts.iter().map(|p| p.0).sum::<usize>(), self.cols);
        let mut offset = 0;
        match self.layout {
            InputLayout::Dense => {
                let start = self.dense.len();
                self.dense.resize(start + self.cols, T::zero());
                let row = &mut self.dense[start..];
                for &(width, idx, vals) in parts {
                    for (&j, &v) in idx.iter().zip(vals) {
                        row[offset + j] = v;
                    }
                    offset += width;
                }
            }
            InputLayout::Sparse => {
                for &(width, idx, vals) in parts {
                    self.indices.extend(idx.iter().map(|&j| offset + j));
                    self.values.extend_from_slice(vals);
                    offset += width;
                }
                self.indptr.push(self.indices.len());
            }
        }
        self.rows += 1;
    }

    pub fn push_row(&mut self, row: &[T]) {
        self.push_concat(&[row]);
    }

    pub fn layout(&self) -> InputLayout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn dense(&self) -> &[T] {
        &self.dense
    }

    /// `(column, value)` pairs of row `r` in sparse layout.
    pub(crate) fn sparse_row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn all_finite(&self) -> bool {
        match self.layout {
            InputLayout::Dense => self.dense.iter().all(|v| v.is_finite()),
            InputLayout::Sparse => self.values.iter().all(|v| v.is_finite()),
        }
    }

    /// Row `r` expanded to a dense vector.
    pub fn row_dense(&self, r: usize) -> Vec<T> {
        match self.layout {
            InputLayout::Dense => self.dense[r * self.cols..(r + 1) * self.cols].to_vec(),
            InputLayout::Sparse => {
                let mut out = vec![T::zero(); self.cols];
                for (j, v) in self.sparse_row(r) {
                    out[j] = v;
                }
                out
            }
        }
    }
}
