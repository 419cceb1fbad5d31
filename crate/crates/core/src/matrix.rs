use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense, row-major real matrix with at least one row and one column and
/// only finite entries.
///
/// Serializes as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(n_rows: usize, n_cols: usize, entries: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must have at least one row and one column, got {n_rows}x{n_cols}"
            )));
        }
        if entries.len() != n_rows * n_cols {
            return Err(Error::Dimension(format!(
                "{n_rows}x{n_cols} matrix needs {} entries, got {}",
                n_rows * n_cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "entry ({}, {}) is not finite",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Matrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    /// Builds a matrix from a sequence of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.is_empty() || n_cols == 0 {
            return Err(Error::Dimension(
                "matrix needs at least one non-empty row".into(),
            ));
        }
        let mut entries = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Matrix::new(rows.len(), n_cols, entries)
    }

    /// Square identity of order `n`.
    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Matrix with every entry equal to `value`.
    pub fn filled(n_rows: usize, n_cols: usize, value: f64) -> Self {
        Matrix::from_fn(n_rows, n_cols, |_, _| value)
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix::filled(n_rows, n_cols, 0.0)
    }

    /// Panics if a dimension is zero or `f` yields a non-finite value.
    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                entries.push(f(i, j));
            }
        }
        Matrix::new(n_rows, n_cols, entries).expect("from_fn produced an invalid matrix")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n_cols)
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows).map(move |i| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// Entries of a 2x2 matrix as `(a, b, c, d)` for `[[a, b], [c, d]]`.
    pub fn as_2x2(&self) -> Result<(f64, f64, f64, f64)> {
        if self.shape() != (2, 2) {
            return Err(Error::Dimension(format!(
                "expected a 2x2 matrix, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        let e = &self.entries;
        Ok((e[0], e[1], e[2], e[3]))
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub(crate) fn swap_rows(&mut self, r: usize, s: usize) {
        if r == s {
            return;
        }
        let n = self.n_cols;
        for k in 0..n {
            self.entries.swap(r * n + k, s * n + k);
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(
            i < self.n_rows && j < self.n_cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.entries[i * self.n_cols + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}
