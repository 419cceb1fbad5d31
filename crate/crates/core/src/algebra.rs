//! Matrix operations, reduced row echelon form with an elementary-operation
//! trail, and the determinant recovered from that trail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tolerance::TolerancePolicy;

pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

pub fn transpose(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.n_cols(), a.n_rows(), |i, j| a.get(j, i))
}

pub fn scale(lambda: f64, a: &Matrix) -> Matrix {
    Matrix::from_fn(a.n_rows(), a.n_cols(), |i, j| lambda * a.get(i, j))
}

pub fn add(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "cannot add {}x{} and {}x{}",
            a.n_rows(),
            a.n_cols(),
            b.n_rows(),
            b.n_cols()
        )));
    }
    Ok(Matrix::from_fn(a.n_rows(), a.n_cols(), |i, j| {
        a.get(i, j) + b.get(i, j)
    }))
}

pub fn mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.n_rows(),
            a.n_cols(),
            b.n_rows(),
            b.n_cols()
        )));
    }
    Ok(Matrix::from_fn(a.n_rows(), b.n_cols(), |i, j| {
        (0..a.n_cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    }))
}

/// `ad - bc` for `[[a, b], [c, d]]`.
pub fn det2(a: &Matrix) -> Result<f64> {
    let (a, b, c, d) = a.as_2x2()?;
    Ok(a * d - b * c)
}

/// Closed-form inverse of a 2x2 matrix. Singular when `|det| <= tol.atol`.
pub fn inverse2(a: &Matrix, tol: TolerancePolicy) -> Result<Matrix> {
    let (p, q, r, s) = a.as_2x2()?;
    let det = p * s - q * r;
    if det.abs() <= tol.atol {
        return Err(Error::Singular { det });
    }
    Matrix::from_rows(&[[s / det, -q / det], [-r / det, p / det]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementaryKind {
    /// Multiply row `i` by `factor`.
    ScaleRow,
    /// Exchange rows `i` and `j`.
    SwapRows,
    /// Add `factor` times row `j` to row `i`.
    AddMultiple,
}

/// One row operation, equivalently left-multiplication by an elementary
/// matrix whose determinant is `det_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryOp {
    pub kind: ElementaryKind,
    pub i: usize,
    pub j: usize,
    pub factor: f64,
    pub det_factor: f64,
}

impl ElementaryOp {
    pub fn scale_row(i: usize, factor: f64) -> Self {
        assert!(factor != 0.0, "row scaling factor must be non-zero");
        ElementaryOp {
            kind: ElementaryKind::ScaleRow,
            i,
            j: i,
            factor,
            det_factor: factor,
        }
    }

    pub fn swap_rows(i: usize, j: usize) -> Self {
        ElementaryOp {
            kind: ElementaryKind::SwapRows,
            i,
            j,
            factor: 1.0,
            det_factor: -1.0,
        }
    }

    /// `row[i] += factor * row[j]`, with `i != j`.
    pub fn add_multiple(i: usize, j: usize, factor: f64) -> Self {
        assert!(i != j, "add_multiple needs two distinct rows");
        ElementaryOp {
            kind: ElementaryKind::AddMultiple,
            i,
            j,
            factor,
            det_factor: 1.0,
        }
    }

    pub fn apply(&self, m: &mut Matrix) {
        let n = m.n_cols();
        match self.kind {
            ElementaryKind::ScaleRow => {
                for x in &mut m.entries_mut()[self.i * n..(self.i + 1) * n] {
                    *x *= self.factor;
                }
            }
            ElementaryKind::SwapRows => m.swap_rows(self.i, self.j),
            ElementaryKind::AddMultiple => {
                let e = m.entries_mut();
                for k in 0..n {
                    e[self.i * n + k] += self.factor * e[self.j * n + k];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrefResult {
    pub reduced: Matrix,
    pub trail: Vec<ElementaryOp>,
    pub rank: usize,
    /// Column of the leading 1 in each of the first `rank` rows.
    pub pivot_cols: Vec<usize>,
}

/// Replays a trail of row operations on a copy of `a`.
pub fn apply_trail(a: &Matrix, trail: &[ElementaryOp]) -> Matrix {
    let mut m = a.clone();
    for op in trail {
        op.apply(&mut m);
    }
    m
}

/// Gauss-Jordan elimination with partial pivoting.
///
/// A column whose largest remaining magnitude is `<= pivot_tol` has no
/// pivot. The reduced matrix is produced by replaying exactly the recorded
/// operations, so `apply_trail(a, &r.trail) == r.reduced` bit for bit.
/// Sub-threshold residue below a pivot-less column is left in place rather
/// than zeroed.
pub fn rref_with_trail(a: &Matrix, pivot_tol: f64) -> Result<RrefResult> {
    if !(pivot_tol > 0.0 && pivot_tol.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "pivot tolerance must be positive, got {pivot_tol}"
        )));
    }
    let (n_rows, n_cols) = a.shape();
    let mut m = a.clone();
    let mut trail = Vec::new();
    let mut pivot_cols = Vec::new();
    let mut push = |op: ElementaryOp, m: &mut Matrix| {
        op.apply(m);
        trail.push(op);
    };

    let mut row = 0;
    for col in 0..n_cols {
        if row == n_rows {
            break;
        }
        let (best, best_abs) = (row..n_rows)
            .map(|r| (r, m.get(r, col).abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= pivot_tol {
            continue;
        }
        if best != row {
            push(ElementaryOp::swap_rows(row, best), &mut m);
        }
        let pivot = m.get(row, col);
        if pivot != 1.0 {
            push(ElementaryOp::scale_row(row, 1.0 / pivot), &mut m);
        }
        for r in 0..n_rows {
            let f = m.get(r, col);
            if r != row && f != 0.0 {
                push(ElementaryOp::add_multiple(r, row, -f), &mut m);
            }
        }
        pivot_cols.push(col);
        row += 1;
    }

    Ok(RrefResult {
        reduced: m,
        trail,
        rank: pivot_cols.len(),
        pivot_cols,
    })
}

/// Checks the four reduced-row-echelon conditions, treating magnitudes
/// `<= zero_tol` as zero:
///
/// 1. every non-zero row leads with a 1,
/// 2. zero rows sit at the bottom,
/// 3. leading 1s move strictly right going down,
/// 4. a column holding a leading 1 is zero elsewhere.
pub fn is_reduced_row_echelon(r: &Matrix, zero_tol: f64) -> bool {
    let is_zero = |x: f64| x.abs() <= zero_tol;
    let mut seen_zero_row = false;
    let mut last_lead: Option<usize> = None;
    for i in 0..r.n_rows() {
        match r.row(i).iter().position(|&x| !is_zero(x)) {
            None => seen_zero_row = true,
            Some(lead) => {
                if seen_zero_row {
                    return false;
                }
                if (r.get(i, lead) - 1.0).abs() > zero_tol {
                    return false;
                }
                if last_lead.is_some_and(|l| lead <= l) {
                    return false;
                }
                if (0..r.n_rows()).any(|k| k != i && !is_zero(r.get(k, lead))) {
                    return false;
                }
                last_lead = Some(lead);
            }
        }
    }
    true
}

/// Determinant as the reciprocal of the product of the elementary-matrix
/// determinants that reduce `a` to the identity. Rank-deficient inputs
/// return exactly `0.0`.
pub fn det_via_trail(a: &Matrix, pivot_tol: f64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "determinant needs a square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let r = rref_with_trail(a, pivot_tol)?;
    if r.rank < a.n_rows() {
        return Ok(0.0);
    }
    let product: f64 = r.trail.iter().map(|op| op.det_factor).product();
    Ok(1.0 / product)
}
