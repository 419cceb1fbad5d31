//! Spectral statistics of 2x2 balanced matrices.
//!
//! For a fully balanced 2x2 matrix with entries at least 1, every row and
//! column sum approximates the larger eigenvalue modulus and every row and
//! column absolute difference approximates the smaller one. Here both sides
//! are available: [`exact_spectrum2`] solves the characteristic polynomial
//! and [`estimate_spectrum2`] reads the moduli off the entries.

use serde::{Deserialize, Serialize};

use crate::algebra::det2;
use crate::balance::classify_balance;
use crate::discrepancy::discrepancy_report;
use crate::error::{Error, Hypothesis, Result};
use crate::matrix::Matrix;
use crate::tolerance::{CheckRecord, TolerancePolicy};

/// Eigenvalues of a 2x2 matrix ordered by modulus, `|lambda1| <= |lambda2|`.
///
/// When the spectrum is complex, `lambda1` holds the common real part and
/// `lambda2` the common modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum2 {
    pub lambda1: f64,
    pub lambda2: f64,
    pub is_complex: bool,
}

impl Spectrum2 {
    /// Builds a real spectrum from two eigenvalues in any order.
    pub fn from_eigenvalues(x: f64, y: f64) -> Self {
        let (lambda1, lambda2) = if x.abs() <= y.abs() { (x, y) } else { (y, x) };
        Spectrum2 {
            lambda1,
            lambda2,
            is_complex: false,
        }
    }

    pub fn min_modulus(&self) -> f64 {
        if self.is_complex {
            self.lambda2
        } else {
            self.lambda1.abs()
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.lambda2.abs()
    }
}

/// Eigenvalues of a 2x2 matrix from `λ² - tr·λ + det = 0`.
///
/// Uses the cancellation-free root `q = (tr + sign(tr)·√disc) / 2` and its
/// partner `det / q`, with the discriminant written as `(a-d)² + 4bc`.
pub fn exact_spectrum2(a: &Matrix) -> Result<Spectrum2> {
    let (p, q, r, s) = a.as_2x2()?;
    let trace = p + s;
    let det = p * s - q * r;
    let disc = (p - s) * (p - s) + 4.0 * q * r;
    if disc < 0.0 {
        return Ok(Spectrum2 {
            lambda1: trace / 2.0,
            lambda2: det.sqrt(),
            is_complex: true,
        });
    }
    let root = disc.sqrt();
    let big = 0.5 * (trace + if trace >= 0.0 { root } else { -root });
    if big == 0.0 {
        return Ok(Spectrum2::from_eigenvalues(0.0, 0.0));
    }
    Ok(Spectrum2::from_eigenvalues(big, det / big))
}

/// Entry-sum estimate of the eigenvalue moduli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// Mean of the row sums and column sums.
    pub max_estimate: f64,
    /// Mean of the absolute row and column differences.
    pub min_estimate: f64,
    /// Largest deviation of a single sum or difference from its group mean.
    pub spread: f64,
}

fn mean4(v: [f64; 4]) -> f64 {
    ((v[0] + v[1]) + (v[2] + v[3])) / 4.0
}

fn deviation4(v: [f64; 4], mean: f64) -> f64 {
    v.iter().fold(0.0, |m, x| m.max((x - mean).abs()))
}

fn require_entries_at_least_one(a: &Matrix) -> Result<()> {
    if a.min_entry() < 1.0 {
        return Err(Error::hypothesis(Hypothesis::EntryBelowOne));
    }
    Ok(())
}

fn require_positive(a: &Matrix) -> Result<()> {
    if a.min_entry() <= 0.0 {
        return Err(Error::hypothesis(Hypothesis::NotPositive));
    }
    Ok(())
}

fn require_balanced(a: &Matrix, tol: TolerancePolicy) -> Result<()> {
    if !classify_balance(a, tol).fully_balanced {
        return Err(Error::hypothesis(Hypothesis::NotBalanced));
    }
    Ok(())
}

/// Estimates the eigenvalue moduli of a fully balanced 2x2 matrix with all
/// entries `>= 1` from its row/column sums and differences.
pub fn estimate_spectrum2(a: &Matrix, tol: TolerancePolicy) -> Result<SpectrumEstimate> {
    let (p, q, r, s) = a.as_2x2()?;
    require_entries_at_least_one(a)?;
    require_balanced(a, tol)?;
    let sums = [p + q, r + s, p + r, q + s];
    let diffs = [(p - q).abs(), (r - s).abs(), (p - r).abs(), (q - s).abs()];
    let max_estimate = mean4(sums);
    let min_estimate = mean4(diffs);
    Ok(SpectrumEstimate {
        max_estimate,
        min_estimate,
        spread: deviation4(sums, max_estimate).max(deviation4(diffs, min_estimate)),
    })
}

/// Leading entry against trace for a positive fully balanced 2x2 matrix.
///
/// Balance bounds `|a² - d²|` by the sum of the row and column allowances,
/// hence `|a - d| <= (τ_rows + τ_cols) / (2·tr)`. The check passes when
/// `|tr - 2a|` fits within twice the comparison allowance on the trace plus
/// twice that balance-induced bound.
pub fn trace_entry_check(a: &Matrix, tol: TolerancePolicy) -> Result<CheckRecord> {
    let (p, _, _, s) = a.as_2x2()?;
    require_positive(a)?;
    let report = classify_balance(a, tol);
    if !report.fully_balanced {
        return Err(Error::hypothesis(Hypothesis::NotBalanced));
    }
    let trace = p + s;
    let rows = &report.row_square_sums;
    let cols = &report.col_square_sums;
    let tau = tol.allowance(rows[0], rows[1]) + tol.allowance(cols[0], cols[1]);
    let balance_bound = tau / (2.0 * trace);
    let slack = 2.0 * (tol.atol + tol.rtol * trace.abs()) + 2.0 * balance_bound;
    Ok(CheckRecord::bound(
        "trace_entry",
        (trace - 2.0 * p).abs(),
        slack,
    ))
}

/// Additivity of the largest eigenvalue modulus over sums of balanced 2x2
/// matrices. The allowance is widened by both estimator spreads.
pub fn emax_additivity_check(a: &Matrix, b: &Matrix, tol: TolerancePolicy) -> Result<CheckRecord> {
    let ea = estimate_spectrum2(a, tol)?;
    let eb = estimate_spectrum2(b, tol)?;
    let sum = crate::algebra::add(a, b)?;
    let lhs = exact_spectrum2(&sum)?.max_modulus();
    let rhs = exact_spectrum2(a)?.max_modulus() + exact_spectrum2(b)?.max_modulus();
    let allowed = tol.allowance(lhs, rhs) + ea.spread + eb.spread;
    Ok(CheckRecord::within("emax_additivity", lhs, rhs, allowed))
}

/// `a·x² + 2b·xy + d·y²` for a symmetric 2x2 matrix.
pub fn quadform_eval(a: &Matrix, x: f64, y: f64) -> Result<f64> {
    let (p, q, _, s) = symmetric_2x2(a)?;
    Ok(p * x * x + 2.0 * q * x * y + s * y * y)
}

fn symmetric_2x2(a: &Matrix) -> Result<(f64, f64, f64, f64)> {
    let (p, q, r, s) = a.as_2x2()?;
    if !TolerancePolicy::default().close(q, r) {
        return Err(Error::Asymmetric { upper: q, lower: r });
    }
    Ok((p, q, r, s))
}

/// Which of the two spectrum-only quadratic-form predictions applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadBranch {
    /// Off-diagonal entry exceeds the diagonal entry.
    BGtA,
    /// Off-diagonal entry is below (or tied with) the diagonal entry.
    BLtA,
}

impl QuadBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadBranch::BGtA => "b_gt_a",
            QuadBranch::BLtA => "b_lt_a",
        }
    }
}

/// Coefficients `(x², xy, y²)` of the form predicted from the moduli alone.
pub fn quadform_coefficients(s: &Spectrum2, branch: QuadBranch) -> (f64, f64, f64) {
    let big = s.max_modulus();
    let small = s.min_modulus().min(big);
    let (k, cross) = match branch {
        QuadBranch::BGtA => ((big - small) / 2.0, 2.0 * small),
        QuadBranch::BLtA => ((big + small) / 2.0, -2.0 * small),
    };
    // k(x+y)² + cross·xy
    (k, 2.0 * k + cross, k)
}

/// Quadratic form predicted from the eigenvalue moduli:
/// `((λ₂ - |λ₁|)/2)(x+y)² + 2|λ₁|xy` when `b > a`, and
/// `((λ₂ + |λ₁|)/2)(x+y)² - 2|λ₁|xy` otherwise.
pub fn quadform_predict(s: &Spectrum2, branch: QuadBranch, x: f64, y: f64) -> f64 {
    let big = s.max_modulus();
    let small = s.min_modulus().min(big);
    let sum2 = (x + y) * (x + y);
    match branch {
        QuadBranch::BGtA => (big - small) / 2.0 * sum2 + 2.0 * small * x * y,
        QuadBranch::BLtA => (big + small) / 2.0 * sum2 - 2.0 * small * x * y,
    }
}

/// `b_gt_a` iff `b > a`; ties under `tol` resolve to `b_lt_a`.
pub fn quadform_branch_select(a: &Matrix, tol: TolerancePolicy) -> Result<QuadBranch> {
    let (p, q, _, _) = symmetric_2x2(a)?;
    if tol.close(p, q) || q < p {
        Ok(QuadBranch::BLtA)
    } else {
        Ok(QuadBranch::BGtA)
    }
}

/// Fairness at `fair_eps`, counting a deviation that ties the threshold
/// under `tol` as fair.
pub(crate) fn fair_within(deviation: f64, fair_eps: f64, tol: TolerancePolicy) -> bool {
    deviation < fair_eps || tol.close(deviation, fair_eps)
}

/// `|det(A+B) - det(A) - det(B)|` for 2x2 matrices, via the cross terms
/// `a₁b₄ + b₁a₄ - a₂b₃ - b₂a₃` to avoid cancellation.
pub fn det_sum_residual2(a: &Matrix, b: &Matrix) -> Result<f64> {
    let (a1, a2, a3, a4) = a.as_2x2()?;
    let (b1, b2, b3, b4) = b.as_2x2()?;
    Ok(((a1 * b4 + b1 * a4) - (a2 * b3 + b2 * a3)).abs())
}

/// Approximate additivity of the determinant when `A` has a negligible
/// eigenvalue and `B` has a fair discrepancy.
///
/// Hypotheses, in order: both 2x2 with entries `>= 1`, both fully balanced,
/// the smaller eigenvalue modulus of `A` approximately 0, and `B` fair along
/// rows or columns at `fair_eps`. The allowed residual is
/// `4·fair_eps·max(A)` plus the comparison allowance.
pub fn det_homomorphism_check(
    a: &Matrix,
    b: &Matrix,
    tol: TolerancePolicy,
    fair_eps: f64,
) -> Result<CheckRecord> {
    a.as_2x2()?;
    b.as_2x2()?;
    require_entries_at_least_one(a)?;
    require_entries_at_least_one(b)?;
    require_balanced(a, tol)?;
    require_balanced(b, tol)?;
    let spec_a = exact_spectrum2(a)?;
    if spec_a.is_complex || !tol.close(spec_a.min_modulus(), 0.0) {
        return Err(Error::hypothesis(Hypothesis::MinEigenNotSmall));
    }
    let disc = discrepancy_report(b, fair_eps)?;
    if !fair_within(disc.max_row_deviation, fair_eps, tol)
        && !fair_within(disc.max_col_deviation, fair_eps, tol)
    {
        return Err(Error::hypothesis(Hypothesis::NotFair));
    }
    let lhs = det_sum_residual2(a, b)?;
    let det_a = det2(a)?;
    let det_b = det2(b)?;
    let det_sum = det2(&crate::algebra::add(a, b)?)?;
    let rhs = 4.0 * fair_eps * a.max_entry() + tol.allowance(det_sum, det_a + det_b);
    Ok(CheckRecord::bound("det_homomorphism", lhs, rhs))
}
