use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hybrid relative/absolute tolerance used wherever two reals are compared
/// "approximately".
///
/// `x ≈ y` iff `|x - y| <= atol + rtol * max(|x|, |y|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rtol: 1e-6,
            atol: 1e-9,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(rtol) || !ok(atol) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be finite and non-negative (rtol = {rtol}, atol = {atol})"
            )));
        }
        if rtol == 0.0 && atol == 0.0 {
            return Err(Error::InvalidInput(
                "at least one of rtol and atol must be positive".into(),
            ));
        }
        Ok(TolerancePolicy { rtol, atol })
    }

    /// Largest gap allowed between `x` and `y`.
    pub fn allowance(&self, x: f64, y: f64) -> f64 {
        self.atol + self.rtol * x.abs().max(y.abs())
    }

    /// Infallible comparison for values already known to be finite.
    pub fn close(&self, x: f64, y: f64) -> bool {
        debug_assert!(x.is_finite() && y.is_finite());
        (x - y).abs() <= self.allowance(x, y)
    }
}

/// Approximate equality under `tol`. Symmetric in `x` and `y`.
pub fn approx_eq(x: f64, y: f64, tol: TolerancePolicy) -> Result<bool> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidInput(format!(
            "approx_eq needs finite operands, got {x} and {y}"
        )));
    }
    Ok(tol.close(x, y))
}

/// Outcome of one theorem or conjecture check.
///
/// `slack` is the observed gap minus the allowed gap, so `holds` is exactly
/// `slack <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl CheckRecord {
    /// One-sided check `lhs <= rhs`.
    pub fn bound(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        CheckRecord::from_slack(name, lhs, rhs, lhs - rhs)
    }

    /// Two-sided check `|lhs - rhs| <= allowed`.
    pub fn within(name: impl Into<String>, lhs: f64, rhs: f64, allowed: f64) -> Self {
        CheckRecord::from_slack(name, lhs, rhs, (lhs - rhs).abs() - allowed)
    }

    pub(crate) fn from_slack(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        CheckRecord {
            name: name.into(),
            holds: slack <= 0.0,
            lhs,
            rhs,
            slack,
        }
    }
}

/// A check either ran or its premise did not apply to the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CheckOutcome {
    Checked(CheckRecord),
    NotApplicable { reason: String },
}

impl CheckOutcome {
    pub fn record(&self) -> Option<&CheckRecord> {
        match self {
            CheckOutcome::Checked(r) => Some(r),
            CheckOutcome::NotApplicable { .. } => None,
        }
    }
}

impl From<CheckRecord> for CheckOutcome {
    fn from(r: CheckRecord) -> Self {
        CheckOutcome::Checked(r)
    }
}
