//! Row/column discrepancy, fairness, and interiors.
//!
//! The discrepancy of a row is its plain entry sum. A row is *fair* at `ε`
//! when every entry lies strictly within `ε` of the row mean. A line is
//! *unfair* when some entry deviates from its mean by at least a threshold
//! `Θ`.

use serde::{Deserialize, Serialize};

use crate::balance::{classify_balance, BalanceReport};
use crate::error::{Error, Hypothesis, Result};
use crate::matrix::Matrix;
use crate::tolerance::{CheckOutcome, CheckRecord, TolerancePolicy};

/// Factor by which fairness may widen when it is carried from rows to
/// columns (or from one row to the others).
pub const TRANSFER_SLACK: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub fair_eps: f64,
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
    pub row_means: Vec<f64>,
    pub col_means: Vec<f64>,
    /// Largest `|M_i - a_ij|` within each row.
    pub row_deviations: Vec<f64>,
    pub col_deviations: Vec<f64>,
    pub max_row_deviation: f64,
    pub max_col_deviation: f64,
    pub fair_rows: bool,
    pub fair_cols: bool,
    pub fair_row_indices: Vec<usize>,
    pub fair_col_indices: Vec<usize>,
}

fn line_stats(lines: impl Iterator<Item = Vec<f64>>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut sums = Vec::new();
    let mut means = Vec::new();
    let mut devs = Vec::new();
    for line in lines {
        let sum: f64 = line.iter().sum();
        let mean = sum / line.len() as f64;
        sums.push(sum);
        means.push(mean);
        devs.push(line.iter().fold(0.0, |m: f64, x| m.max((mean - x).abs())));
    }
    (sums, means, devs)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub fn discrepancy_report(a: &Matrix, fair_eps: f64) -> Result<DiscrepancyReport> {
    if !(fair_eps > 0.0 && fair_eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "fairness threshold must be positive, got {fair_eps}"
        )));
    }
    let (row_sums, row_means, row_deviations) = line_stats(a.rows().map(<[f64]>::to_vec));
    let (col_sums, col_means, col_deviations) =
        line_stats((0..a.n_cols()).map(|j| a.col(j).collect()));
    let fair = |devs: &[f64]| -> Vec<usize> {
        devs.iter()
            .enumerate()
            .filter(|(_, &d)| d < fair_eps)
            .map(|(i, _)| i)
            .collect()
    };
    let max_row_deviation = max_of(&row_deviations);
    let max_col_deviation = max_of(&col_deviations);
    Ok(DiscrepancyReport {
        fair_eps,
        fair_row_indices: fair(&row_deviations),
        fair_col_indices: fair(&col_deviations),
        fair_rows: max_row_deviation < fair_eps,
        fair_cols: max_col_deviation < fair_eps,
        max_row_deviation,
        max_col_deviation,
        row_sums,
        col_sums,
        row_means,
        col_means,
        row_deviations,
        col_deviations,
    })
}

fn require_positive_balanced(a: &Matrix, tol: TolerancePolicy) -> Result<BalanceReport> {
    if a.min_entry() <= 0.0 {
        return Err(Error::hypothesis(Hypothesis::NotPositive));
    }
    let report = classify_balance(a, tol);
    if !report.fully_balanced {
        return Err(Error::hypothesis(Hypothesis::NotBalanced));
    }
    Ok(report)
}

/// Fairness transfers between rows and columns of a positive fully
/// balanced matrix.
///
/// Rows fair at `ε` must give columns fair at `2ε`, and columns fair at `ε`
/// must give rows fair at `2ε`. The record's `lhs` is the largest
/// deviation that one of those implications constrains; `rhs` is `2ε`.
/// Not applicable when neither rows nor columns are fair.
pub fn fairness_transfer_check(
    a: &Matrix,
    tol: TolerancePolicy,
    fair_eps: f64,
) -> Result<CheckOutcome> {
    require_positive_balanced(a, tol)?;
    let d = discrepancy_report(a, fair_eps)?;
    let mut constrained: Option<f64> = None;
    if d.fair_rows {
        constrained = Some(d.max_col_deviation);
    }
    if d.fair_cols {
        constrained = Some(constrained.unwrap_or(0.0).max(d.max_row_deviation));
    }
    Ok(match constrained {
        Some(dev) => CheckRecord::bound("fairness_transfer", dev, TRANSFER_SLACK * fair_eps).into(),
        None => CheckOutcome::NotApplicable {
            reason: "neither rows nor columns are fair".into(),
        },
    })
}

/// When exactly one row is fair, the columns must be unfair: some column
/// deviation reaches `Θ - 2ε`. For 2x2 inputs the configuration should be
/// impossible, so the check additionally requires every row to be fair at
/// `2ε`; the reported record is the worse of the two sub-checks.
pub fn one_fair_row_check(
    a: &Matrix,
    tol: TolerancePolicy,
    fair_eps: f64,
    unfair_theta: f64,
) -> Result<CheckOutcome> {
    if !(unfair_theta > fair_eps) {
        return Err(Error::InvalidInput(format!(
            "unfairness threshold {unfair_theta} must exceed fairness threshold {fair_eps}"
        )));
    }
    require_positive_balanced(a, tol)?;
    let d = discrepancy_report(a, fair_eps)?;
    if d.fair_row_indices.len() != 1 {
        return Ok(CheckOutcome::NotApplicable {
            reason: format!(
                "{} fair rows, premise needs exactly one",
                d.fair_row_indices.len()
            ),
        });
    }
    let columns = CheckRecord::bound(
        "one_fair_row",
        unfair_theta - TRANSFER_SLACK * fair_eps,
        d.max_col_deviation,
    );
    if a.shape() != (2, 2) {
        return Ok(columns.into());
    }
    let rows = CheckRecord::bound(
        "one_fair_row_2x2",
        d.max_row_deviation,
        TRANSFER_SLACK * fair_eps,
    );
    let worse = if rows.slack > columns.slack {
        rows
    } else {
        columns
    };
    Ok(CheckRecord::from_slack("one_fair_row_2x2", worse.lhs, worse.rhs, worse.slack).into())
}

/// One fair row forces every row fair (at `2ε`). Evidence for a
/// conjecture, so callers should treat failures as findings. Not
/// applicable when no row is fair.
pub fn fairness_propagation_check(
    a: &Matrix,
    tol: TolerancePolicy,
    fair_eps: f64,
) -> Result<CheckOutcome> {
    if !classify_balance(a, tol).fully_balanced {
        return Err(Error::hypothesis(Hypothesis::NotBalanced));
    }
    let d = discrepancy_report(a, fair_eps)?;
    if d.fair_row_indices.is_empty() {
        return Ok(CheckOutcome::NotApplicable {
            reason: "no fair row".into(),
        });
    }
    Ok(CheckRecord::bound(
        "fairness_propagation",
        d.max_row_deviation,
        TRANSFER_SLACK * fair_eps,
    )
    .into())
}

/// Contiguous block `[row_start, row_start + row_count) x [col_start, col_start + col_count)`.
pub fn interior(
    a: &Matrix,
    row_start: usize,
    row_count: usize,
    col_start: usize,
    col_count: usize,
) -> Result<Matrix> {
    if row_count == 0 || col_count == 0 {
        return Err(Error::Dimension(
            "interior needs at least one row and one column".into(),
        ));
    }
    let fits = |start: usize, count: usize, len: usize| {
        start.checked_add(count).is_some_and(|end| end <= len)
    };
    if !fits(row_start, row_count, a.n_rows()) || !fits(col_start, col_count, a.n_cols()) {
        return Err(Error::Dimension(format!(
            "interior rows {row_start}+{row_count}, cols {col_start}+{col_count} exceed {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    Ok(Matrix::from_fn(row_count, col_count, |i, j| {
        a.get(row_start + i, col_start + j)
    }))
}

fn select(a: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| a.get(rows[i], cols[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InteriorMode {
    /// Contiguous square blocks.
    #[default]
    Contiguous,
    /// Any choice of `k` rows and `k` columns.
    Subset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorHit {
    pub dim: usize,
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub block: Matrix,
    pub report: BalanceReport,
}

/// k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn candidate_index_sets(n: usize, k: usize, mode: InteriorMode) -> Vec<Vec<usize>> {
    match mode {
        InteriorMode::Contiguous => (0..=n - k).map(|s| (s..s + k).collect()).collect(),
        InteriorMode::Subset => combinations(n, k),
    }
}

/// Searches for a fully balanced square contiguous interior of dimension
/// at least `min_dim`.
pub fn find_balanced_interior(
    a: &Matrix,
    tol: TolerancePolicy,
    min_dim: usize,
) -> Result<Option<InteriorHit>> {
    find_balanced_interior_with(a, tol, min_dim, InteriorMode::Contiguous)
}

/// Scans dimensions from `n - 1` down to `min_dim`, rows then columns in
/// increasing order, and returns the first block `classify_balance`
/// accepts. `None` means no such interior exists.
pub fn find_balanced_interior_with(
    a: &Matrix,
    tol: TolerancePolicy,
    min_dim: usize,
    mode: InteriorMode,
) -> Result<Option<InteriorHit>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "interior search needs a square matrix, got {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let n = a.n_rows();
    if min_dim < 2 || min_dim >= n {
        return Err(Error::InvalidInput(format!(
            "minimum interior dimension must satisfy 2 <= min_dim < {n}, got {min_dim}"
        )));
    }
    if !classify_balance(a, tol).fully_balanced {
        return Err(Error::hypothesis(Hypothesis::NotBalanced));
    }
    for k in (min_dim..n).rev() {
        let sets = candidate_index_sets(n, k, mode);
        for rows in &sets {
            for cols in &sets {
                let block = select(a, rows, cols);
                let report = classify_balance(&block, tol);
                if report.fully_balanced {
                    return Ok(Some(InteriorHit {
                        dim: k,
                        row_indices: rows.clone(),
                        col_indices: cols.clone(),
                        block,
                        report,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Every contiguous interior of a positive fully balanced matrix that is
/// fair along rows or columns stays balanced, at an absolute tolerance
/// widened by `8·max(k, l)·ε·max(A)` for a `k x l` block. The record
/// reports the block with the largest slack.
pub fn interior_corollary_check(
    a: &Matrix,
    tol: TolerancePolicy,
    fair_eps: f64,
) -> Result<CheckOutcome> {
    require_positive_balanced(a, tol)?;
    let d = discrepancy_report(a, fair_eps)?;
    if !d.fair_rows && !d.fair_cols {
        return Ok(CheckOutcome::NotApplicable {
            reason: "neither rows nor columns are fair".into(),
        });
    }
    let (n, m) = a.shape();
    let top = a.max_abs();
    let mut worst: Option<CheckRecord> = None;
    for k in 1..=n {
        for l in 1..=m {
            let widened = TolerancePolicy {
                rtol: tol.rtol,
                atol: tol.atol + 8.0 * k.max(l) as f64 * fair_eps * top,
            };
            for r0 in 0..=n - k {
                for c0 in 0..=m - l {
                    let block = interior(a, r0, k, c0, l)?;
                    let report = classify_balance(&block, widened);
                    for sums in [&report.row_square_sums, &report.col_square_sums] {
                        let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
                        let rec = CheckRecord::bound(
                            "interior_corollary",
                            hi - lo,
                            widened.allowance(hi, lo),
                        );
                        if worst.as_ref().is_none_or(|w| rec.slack > w.slack) {
                            worst = Some(rec);
                        }
                    }
                }
            }
        }
    }
    Ok(worst.expect("at least one interior").into())
}
