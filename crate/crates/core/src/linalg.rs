//! Dense and compressed-sparse-row kernels for the masked layers.
//!
//! A layer's weights live in a [`CsrMatrix`] whose sparsity pattern is
//! copied from a [`BipartiteTopology`] and never changes afterwards: the
//! adjacency mask is realized structurally instead of re-applying an
//! element-wise mask after every update. Entries that are not stored are
//! exact zeros forever. All arithmetic is f64; within a row, accumulation
//! runs in ascending column order so results are reproducible.

use crate::error::{Error, Result};
use crate::topology::BipartiteTopology;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute asymmetry |a_ij - a_ji|, 0 for symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in (r + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Compressed sparse row matrix with an immutable pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build a CSR matrix whose pattern equals the topology exactly
    /// (row `i` of the topology becomes row `i` here). `init` is called
    /// once per stored entry, in row-major edge order, with the entry's
    /// (row, column) position.
    pub fn from_topology(t: &BipartiteTopology, mut init: impl FnMut(usize, usize) -> f64) -> Self {
        let rows = t.left_count();
        let cols = t.right_count();
        let nnz = t.edge_count();
        let mut row_offsets = Vec::with_capacity(rows + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_offsets.push(0);
        for (r, row) in t.rows().iter().enumerate() {
            col_indices.extend_from_slice(row);
            for &c in row {
                values.push(init(r, c));
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Assemble from raw parts, validating the CSR invariants.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidConfig("bad CSR row offsets".into()));
        }
        if *row_offsets.last().unwrap() != col_indices.len() || col_indices.len() != values.len() {
            return Err(Error::InvalidConfig("CSR lengths disagree".into()));
        }
        for r in 0..rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::InvalidConfig("CSR row offsets decrease".into()));
            }
            let mut prev: Option<usize> = None;
            for &c in &col_indices[lo..hi] {
                if c >= cols {
                    return Err(Error::InvalidConfig("CSR column out of range".into()));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::InvalidConfig(
                        "CSR columns must be strictly ascending within a row".into(),
                    ));
                }
                prev = Some(c);
            }
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Stored (column, value) pairs of one row.
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        self.col_indices[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// Two matrices share a pattern if offsets and column indices agree.
    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }

    /// `y[r] = sum over stored (r,c) of M[r,c] * x[c]`
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "spmv input length",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let mut acc = 0.0;
            for t in lo..hi {
                acc += self.values[t] * x[self.col_indices[t]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// `y[c] = sum over stored (r,c) of M[r,c] * x[r]`
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "spmv_transpose input length",
                expected: self.rows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let xr = x[r];
            for t in lo..hi {
                y[self.col_indices[t]] += self.values[t] * xr;
            }
        }
        Ok(y)
    }

    /// `M[r,c] += scale * u[r] * v[c]`, touching stored positions only:
    /// the masked rank-one gradient update.
    pub fn outer_accumulate(&mut self, u: &[f64], v: &[f64], scale: f64) -> Result<()> {
        if u.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "outer_accumulate left length",
                expected: self.rows,
                got: u.len(),
            });
        }
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "outer_accumulate right length",
                expected: self.cols,
                got: v.len(),
            });
        }
        for r in 0..self.rows {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let ur = u[r];
            for t in lo..hi {
                self.values[t] += scale * ur * v[self.col_indices[t]];
            }
        }
        Ok(())
    }

    /// Expand to dense. Non-pattern positions come out as exact 0.0.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                d.set(r, c, v);
            }
        }
        d
    }
}
