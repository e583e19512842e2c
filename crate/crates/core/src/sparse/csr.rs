use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_shape, Error, Result};
use crate::Mat;

/// Compressed sparse row matrix of `f64`.
///
/// Column indices are strictly increasing inside each row and every stored
/// value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCsr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCsr {
    /// Builds a matrix from raw CSR arrays, checking the layout invariants.
    pub fn from_raw(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(Error::param("row_ptr", "must have rows + 1 entries starting at 0"));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != values.len() {
            return Err(Error::param("row_ptr", "last entry must equal the number of stored values"));
        }
        for r in 0..rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return Err(Error::param("row_ptr", "must be non-decreasing"));
            }
            let cols_in_row = &col_idx[lo..hi];
            if cols_in_row.iter().any(|&c| c >= cols) {
                return Err(Error::param("col_idx", "column index out of bounds"));
            }
            if cols_in_row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::param("col_idx", "must be strictly increasing within a row"));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(Error::param("triplets", "index out of bounds"));
            }
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::from_raw(rows, cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &Mat) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets).expect("dense entries are in bounds")
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates over the `(col, value)` pairs stored in row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn to_dense(&self) -> Mat {
        let mut out = Mat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        Self::from_triplets(self.cols, self.rows, &triplets).expect("transpose stays in bounds")
    }

    /// Places `self` and `other` side by side: `[self | other]`.
    pub fn hstack(&self, other: &SparseCsr) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                op: "hstack",
                expected: (self.rows, other.cols),
                found: other.shape(),
            });
        }
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_ptr.push(0);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                col_idx.push(c);
                values.push(v);
            }
            for (c, v) in other.row(r) {
                col_idx.push(self.cols + c);
                values.push(v);
            }
            row_ptr.push(values.len());
        }
        Self::from_raw(self.rows, self.cols + other.cols, row_ptr, col_idx, values)
    }

    /// Multiplies every stored value by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Scales column `c` by `factors[c]`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "scale_columns",
                expected: (self.cols, 1),
                found: (factors.len(), 1),
            });
        }
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&self.col_idx) {
            *v *= factors[c];
        }
        Ok(out)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            sums[c] += v;
        }
        sums
    }

    /// Sparse-dense product `self * b`.
    pub fn spmm(&self, b: &Mat) -> Result<Mat> {
        check_shape("spmm", (self.cols, b.ncols()), b.shape())?;
        let mut out = Mat::zeros(self.rows, b.ncols());
        for j in 0..b.ncols() {
            let src = b.column(j);
            let mut dst = out.column_mut(j);
            for r in 0..self.rows {
                let mut acc = 0.0;
                for (c, v) in self.row(r) {
                    acc += v * src[c];
                }
                dst[r] = acc;
            }
        }
        Ok(out)
    }

    /// Transposed product `selfᵀ * b` without forming the transpose.
    pub fn spmm_t(&self, b: &Mat) -> Result<Mat> {
        check_shape("spmm_t", (self.rows, b.ncols()), b.shape())?;
        let mut out = Mat::zeros(self.cols, b.ncols());
        for j in 0..b.ncols() {
            let src = b.column(j);
            let mut dst = out.column_mut(j);
            for r in 0..self.rows {
                let x = src[r];
                if x == 0.0 {
                    continue;
                }
                for (c, v) in self.row(r) {
                    dst[c] += v * x;
                }
            }
        }
        Ok(out)
    }

    /// Applies `self * selfᵀ` to `b` as two sparse products.
    pub fn gram_apply(&self, b: &Mat) -> Result<Mat> {
        let t = self.spmm_t(b)?;
        self.spmm(&t)
    }

    /// Dense `self * selfᵀ`, built from row inner products.
    pub fn gram_dense(&self) -> Mat {
        let mut out = Mat::zeros(self.rows, self.rows);
        // Rows carry very few nonzeros here, so go through the transpose
        // to find overlapping rows instead of comparing every pair.
        let t = self.transpose();
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                for (r2, w) in t.row(c) {
                    out[(r, r2)] += v * w;
                }
            }
        }
        out
    }
}
