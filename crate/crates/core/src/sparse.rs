//! Row-compressed real matrices.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SparseError {
    #[error("dimension mismatch: {op} with {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// CSR matrix. Column indices are strictly increasing within a row and no
/// exact zero is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
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

    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// resulting zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(SparseError::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            per_row[r].push((c, v));
        }
        Ok(Self::from_rows(cols, per_row))
    }

    /// Builds from per-row entry lists (any order, duplicates summed).
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows.iter().cloned() {
            row.sort_by_key(|e| e.0);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                assert!(c < cols, "column {c} out of range {cols}");
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let cols = dense.first().map_or(0, Vec::len);
        Self::from_rows(
            cols,
            dense
                .iter()
                .map(|r| r.iter().copied().enumerate().filter(|e| e.1 != 0.0).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(r);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row_entries(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.cols {
            return Err(SparseError::DimensionMismatch {
                op: "A*x",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row_entries(r).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    /// `Aᵀ x` without forming the transpose.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.rows {
            return Err(SparseError::DimensionMismatch {
                op: "A^T*x",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        let mut y = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row_entries(r) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                let p = next[c];
                col_idx[p] = r;
                values[p] = v;
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self · other` (row-by-row Gustavson).
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        if self.cols != other.rows {
            return Err(SparseError::DimensionMismatch {
                op: "A*B",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut pattern = Vec::new();
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..self.rows {
            pattern.clear();
            for (k, a) in self.row_entries(r) {
                for (c, b) in other.row_entries(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                if acc[c] != 0.0 {
                    col_idx.push(c);
                    values.push(acc[c]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `self · middle · selfᵀ`, the congruence used for Gram matrices.
    pub fn congruence(&self, middle: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        self.matmul(middle)?.matmul(&self.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.compact()
    }

    /// Entrywise `self − other`.
    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        if self.shape() != other.shape() {
            return Err(SparseError::DimensionMismatch {
                op: "A-B",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let rows = (0..self.rows)
            .map(|r| {
                self.row_entries(r)
                    .chain(other.row_entries(r).map(|(c, v)| (c, -v)))
                    .collect()
            })
            .collect();
        Ok(Self::from_rows(self.cols, rows))
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.iter().all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.iter() {
            out[r][c] = v;
        }
        out
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_rows(self.cols, rows.iter().map(|&r| self.row_entries(r).collect()).collect())
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        if self.cols != below.cols {
            return Err(SparseError::DimensionMismatch {
                op: "vstack",
                left: self.shape(),
                right: below.shape(),
            });
        }
        let offset = self.nnz();
        let mut out = self.clone();
        out.rows += below.rows;
        out.row_ptr.extend(below.row_ptr[1..].iter().map(|p| p + offset));
        out.col_idx.extend_from_slice(&below.col_idx);
        out.values.extend_from_slice(&below.values);
        Ok(out)
    }

    fn compact(self) -> Self {
        let rows = (0..self.rows).map(|r| self.row_entries(r).collect()).collect();
        Self::from_rows(self.cols, rows)
    }

    /// Text dump: a `rows cols nnz` header followed by one zero-based
    /// `row col value` triple per line, values with 17 significant digits.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(out, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
