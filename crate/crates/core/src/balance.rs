//! Horizontal, vertical and full balance.
//!
//! Balance compares the squared-entry sums of every pair of rows (or
//! columns). The *defect* along an axis is the spread of those sums,
//! `(max S - min S) / max(1, max S)`, which is zero exactly when all sums
//! agree and is unchanged by scaling the matrix.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::tolerance::TolerancePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Rows,
    Columns,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Rows => Axis::Columns,
            Axis::Columns => Axis::Rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub row_square_sums: Vec<f64>,
    pub col_square_sums: Vec<f64>,
    pub horizontal_defect: f64,
    pub vertical_defect: f64,
    pub horizontally_balanced: bool,
    pub vertically_balanced: bool,
    pub fully_balanced: bool,
    /// The zero matrix is never balanced.
    pub is_zero: bool,
}

impl BalanceReport {
    /// Larger of the two defects.
    pub fn max_defect(&self) -> f64 {
        self.horizontal_defect.max(self.vertical_defect)
    }
}

/// Sum of squared entries of each row or each column.
///
/// Both axes accumulate in increasing index order, so the row sums of `A`
/// and the column sums of its transpose are bit-identical.
pub fn square_sums(a: &Matrix, axis: Axis) -> Vec<f64> {
    match axis {
        Axis::Rows => a.rows().map(|r| r.iter().map(|x| x * x).sum()).collect(),
        Axis::Columns => (0..a.n_cols())
            .map(|j| a.col(j).map(|x| x * x).sum())
            .collect(),
    }
}

fn defect_of(sums: &[f64]) -> f64 {
    if sums.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = sums
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    (hi - lo) / hi.max(1.0)
}

fn pairwise_close(sums: &[f64], tol: TolerancePolicy) -> bool {
    sums.iter()
        .enumerate()
        .all(|(r, &sr)| sums[..r].iter().all(|&ss| tol.close(sr, ss)))
}

/// Normalized balance defect of `a` along `axis`; 0 for a single row or column.
pub fn balance_defect(a: &Matrix, axis: Axis) -> f64 {
    defect_of(&square_sums(a, axis))
}

/// Spread of the square sums relative to the largest one, without the
/// `max(1, ·)` floor; exactly scale-invariant up to rounding for any
/// non-zero matrix. 0 for the zero matrix.
pub fn relative_defect(a: &Matrix, axis: Axis) -> f64 {
    let sums = square_sums(a, axis);
    let hi = sums.iter().copied().fold(0.0, f64::max);
    if hi == 0.0 {
        return 0.0;
    }
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi
}

pub fn classify_balance(a: &Matrix, tol: TolerancePolicy) -> BalanceReport {
    let row_square_sums = square_sums(a, Axis::Rows);
    let col_square_sums = square_sums(a, Axis::Columns);
    let is_zero = a.is_zero();
    let horizontally_balanced = !is_zero && pairwise_close(&row_square_sums, tol);
    let vertically_balanced = !is_zero && pairwise_close(&col_square_sums, tol);
    BalanceReport {
        horizontal_defect: defect_of(&row_square_sums),
        vertical_defect: defect_of(&col_square_sums),
        row_square_sums,
        col_square_sums,
        horizontally_balanced,
        vertically_balanced,
        fully_balanced: horizontally_balanced && vertically_balanced,
        is_zero,
    }
}

pub fn is_fully_balanced(a: &Matrix, tol: TolerancePolicy) -> bool {
    classify_balance(a, tol).fully_balanced
}
