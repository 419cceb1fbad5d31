//! Seeded generators for matrices on (or near) the balanced manifold, and
//! property campaigns that run every theorem and conjecture check over them.
//!
//! Balanced matrices have measure zero, so they are sampled from structured
//! families instead of by rejection. Every trial draws from its own ChaCha
//! stream keyed by `(seed, trial index)`, so campaigns are reproducible and
//! independent of how trials are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{add, det_via_trail, inverse2, mul, transpose, DEFAULT_PIVOT_TOL};
use crate::balance::{balance_defect, classify_balance, relative_defect, Axis};
use crate::discrepancy::{
    discrepancy_report, fairness_propagation_check, fairness_transfer_check,
    find_balanced_interior_with, interior_corollary_check, one_fair_row_check, InteriorMode,
};
use crate::error::{Error, Hypothesis, Result};
use crate::matrix::Matrix;
use crate::spectral2::{
    det_homomorphism_check, emax_additivity_check, estimate_spectrum2, exact_spectrum2,
    fair_within, quadform_branch_select, quadform_eval, quadform_predict, trace_entry_check,
};
use crate::tolerance::{CheckOutcome, CheckRecord, TolerancePolicy};

/// Stored counterexamples per report.
pub const COUNTEREXAMPLE_CAP: usize = 100;

/// Grid used to compare predicted and evaluated quadratic forms.
pub const QUADFORM_GRID: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GenKind {
    /// `λ · ones(n, n)`.
    Constant,
    /// `[[a, b], [b, a]]`.
    Symmetric2,
    /// Sylvester Hadamard pattern times `λ`; `n` must be a power of two.
    HadamardLike,
    /// Haar-random orthogonal matrix times `λ`.
    ScaledOrthogonal,
    /// A randomly chosen structured family plus entrywise noise.
    Perturbed,
}

impl GenKind {
    pub const ALL: [GenKind; 5] = [
        GenKind::Constant,
        GenKind::Symmetric2,
        GenKind::HadamardLike,
        GenKind::ScaledOrthogonal,
        GenKind::Perturbed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::Constant => "constant",
            GenKind::Symmetric2 => "symmetric2",
            GenKind::HadamardLike => "hadamard_like",
            GenKind::ScaledOrthogonal => "scaled_orthogonal",
            GenKind::Perturbed => "perturbed",
        }
    }

    /// Whether the family can produce an `n x n` matrix.
    pub fn supports(self, n: usize) -> bool {
        match self {
            GenKind::Symmetric2 => n == 2,
            GenKind::HadamardLike => n.is_power_of_two(),
            _ => n >= 1,
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub entry_low: f64,
    pub entry_high: f64,
    /// Radius of the entrywise uniform perturbation.
    pub noise: f64,
    pub seed: u64,
}

impl GenSpec {
    /// Entries in `[1, 100]`, no noise, seed 0.
    pub fn new(kind: GenKind, n: usize) -> Self {
        GenSpec {
            kind,
            n,
            entry_low: 1.0,
            entry_high: 100.0,
            noise: 0.0,
            seed: 0,
        }
    }

    pub fn with_range(mut self, low: f64, high: f64) -> Self {
        self.entry_low = low;
        self.entry_high = high;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.entry_low.is_finite() && self.entry_high.is_finite() && self.noise.is_finite()) {
            return Err(Error::Config("generator parameters must be finite".into()));
        }
        if self.entry_low < 1.0 || self.entry_low > self.entry_high {
            return Err(Error::Config(format!(
                "entry range must satisfy 1 <= low <= high, got [{}, {}]",
                self.entry_low, self.entry_high
            )));
        }
        if self.noise < 0.0 {
            return Err(Error::Config(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !self.kind.supports(self.n) {
            return Err(Error::UnsupportedDimension {
                kind: self.kind.as_str(),
                n: self.n,
            });
        }
        Ok(())
    }
}

/// Random stream for one trial of a campaign.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws one matrix from the family described by `spec`, using stream 0 of
/// its seed.
pub fn generate(spec: &GenSpec) -> Result<Matrix> {
    generate_with_rng(spec, &mut trial_rng(spec.seed, 0))
}

pub fn generate_with_rng<R: Rng + ?Sized>(spec: &GenSpec, rng: &mut R) -> Result<Matrix> {
    spec.validate()?;
    let kind = match spec.kind {
        GenKind::Perturbed => {
            let bases: Vec<GenKind> = GenKind::ALL[..4]
                .iter()
                .copied()
                .filter(|k| k.supports(spec.n))
                .collect();
            bases[rng.random_range(0..bases.len())]
        }
        k => k,
    };
    let mut draw = || rng.random_range(spec.entry_low..=spec.entry_high);
    let base = match kind {
        GenKind::Constant => Matrix::filled(spec.n, spec.n, draw()),
        GenKind::Symmetric2 => {
            let (a, b) = (draw(), draw());
            symmetric2(a, b)
        }
        GenKind::HadamardLike => {
            let lambda = draw();
            crate::algebra::scale(lambda, &sylvester_hadamard(spec.n)?)
        }
        GenKind::ScaledOrthogonal => {
            let lambda = draw();
            crate::algebra::scale(lambda, &random_orthogonal(spec.n, rng))
        }
        GenKind::Perturbed => unreachable!("resolved to a base family above"),
    };
    Ok(perturb(base, spec.noise, rng))
}

fn perturb<R: Rng + ?Sized>(m: Matrix, noise: f64, rng: &mut R) -> Matrix {
    if noise == 0.0 {
        return m;
    }
    Matrix::from_fn(m.n_rows(), m.n_cols(), |i, j| {
        m.get(i, j) + rng.random_range(-noise..=noise)
    })
}

pub fn symmetric2(a: f64, b: f64) -> Matrix {
    Matrix::from_fn(2, 2, |i, j| if i == j { a } else { b })
}

/// Sylvester construction: `H₁ = [1]`, `H₂ₖ = [[H, H], [H, -H]]`.
pub fn sylvester_hadamard(n: usize) -> Result<Matrix> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::UnsupportedDimension {
            kind: GenKind::HadamardLike.as_str(),
            n,
        });
    }
    // H[i][j] = (-1)^popcount(i & j)
    Ok(Matrix::from_fn(n, n, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}

/// Haar-distributed orthogonal matrix: Gram-Schmidt (applied twice) on the
/// columns of a standard Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for q in &cols {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, qi) in v.iter_mut().zip(q) {
                    *x -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Laplace expansion along the first row.
pub fn cofactor_det(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Dimension(
            "cofactor expansion needs a square matrix".into(),
        ));
    }
    fn expand(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        if n == 1 {
            return rows[0][0];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(k, _)| k != j)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * rows[0][j] * expand(&minor)
            })
            .sum()
    }
    Ok(expand(&a.to_rows()))
}

/// Product of row norms; bounds `|det|`.
fn hadamard_bound(a: &Matrix) -> f64 {
    a.rows()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Property {
    ClosureAdd,
    ClosureMul,
    ClosureInverse,
    ClosureTranspose,
    ClosureScale,
    DetTrail,
    DetNonzero,
    EstimatorExact,
    Quadform,
    TraceEntry,
    EmaxAdditivity,
    Homomorphism,
    HomomorphismNxn,
    FairnessTransfer,
    OneFairRow,
    Edos,
    InteriorConjecture,
    InteriorSubsetConjecture,
    InteriorCorollary,
}

impl Property {
    pub const ALL: [Property; 19] = [
        Property::ClosureAdd,
        Property::ClosureMul,
        Property::ClosureInverse,
        Property::ClosureTranspose,
        Property::ClosureScale,
        Property::DetTrail,
        Property::DetNonzero,
        Property::EstimatorExact,
        Property::Quadform,
        Property::TraceEntry,
        Property::EmaxAdditivity,
        Property::Homomorphism,
        Property::HomomorphismNxn,
        Property::FairnessTransfer,
        Property::OneFairRow,
        Property::Edos,
        Property::InteriorConjecture,
        Property::InteriorSubsetConjecture,
        Property::InteriorCorollary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::ClosureAdd => "closure_add",
            Property::ClosureMul => "closure_mul",
            Property::ClosureInverse => "closure_inverse",
            Property::ClosureTranspose => "closure_transpose",
            Property::ClosureScale => "closure_scale",
            Property::DetTrail => "det_trail",
            Property::DetNonzero => "det_nonzero",
            Property::EstimatorExact => "estimator_exact",
            Property::Quadform => "quadform",
            Property::TraceEntry => "trace_entry",
            Property::EmaxAdditivity => "emax_additivity",
            Property::Homomorphism => "homomorphism",
            Property::HomomorphismNxn => "homomorphism_nxn",
            Property::FairnessTransfer => "fairness_transfer",
            Property::OneFairRow => "one_fair_row",
            Property::Edos => "edos",
            Property::InteriorConjecture => "interior_conjecture",
            Property::InteriorSubsetConjecture => "interior_subset_conjecture",
            Property::InteriorCorollary => "interior_corollary",
        }
    }

    /// Conjecture campaigns (and claims whose general form is unproven)
    /// only report; a violation there is a finding, not a defect.
    pub fn is_conjecture(self) -> bool {
        matches!(
            self,
            Property::DetNonzero
                | Property::HomomorphismNxn
                | Property::Edos
                | Property::InteriorConjecture
                | Property::InteriorSubsetConjecture
                | Property::InteriorCorollary
        )
    }

    fn requires_2x2(self) -> bool {
        matches!(
            self,
            Property::ClosureAdd
                | Property::ClosureMul
                | Property::ClosureInverse
                | Property::EstimatorExact
                | Property::Quadform
                | Property::TraceEntry
                | Property::EmaxAdditivity
                | Property::Homomorphism
        )
    }

    fn check_dimension(self, n: usize) -> Result<()> {
        if self.requires_2x2() && n != 2 {
            return Err(Error::Config(format!(
                "property {} needs n = 2, got {n}",
                self.name()
            )));
        }
        let interior = matches!(
            self,
            Property::InteriorConjecture | Property::InteriorSubsetConjecture
        );
        if interior && n < 3 {
            return Err(Error::Config(format!(
                "property {} needs n >= 3, got {n}",
                self.name()
            )));
        }
        Ok(())
    }

    /// Draws the inputs one trial checks.
    pub fn generate_inputs<R: Rng + ?Sized>(
        self,
        spec: &GenSpec,
        rng: &mut R,
    ) -> Result<Vec<Matrix>> {
        let one = |rng: &mut R| generate_with_rng(spec, rng);
        Ok(match self {
            Property::ClosureAdd | Property::ClosureMul | Property::EmaxAdditivity => {
                vec![one(rng)?, one(rng)?]
            }
            Property::ClosureScale => {
                let a = one(rng)?;
                let lambda = rng.random_range(spec.entry_low..=spec.entry_high);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                vec![a, Matrix::filled(1, 1, sign * lambda)]
            }
            Property::Homomorphism | Property::HomomorphismNxn => {
                let lambda = rng.random_range(spec.entry_low..=spec.entry_high);
                vec![Matrix::filled(spec.n, spec.n, lambda), one(rng)?]
            }
            _ => vec![one(rng)?],
        })
    }

    /// Runs the check on stored inputs. Used by campaigns and to replay
    /// counterexamples.
    pub fn check(self, inputs: &[Matrix], params: &CampaignParams) -> Result<CheckOutcome> {
        let expected = match self {
            Property::ClosureAdd
            | Property::ClosureMul
            | Property::ClosureScale
            | Property::EmaxAdditivity
            | Property::Homomorphism
            | Property::HomomorphismNxn => 2,
            _ => 1,
        };
        if inputs.len() != expected {
            return Err(Error::Config(format!(
                "property {} takes {expected} input matrices, got {}",
                self.name(),
                inputs.len()
            )));
        }
        let a = &inputs[0];
        let tol = params.tol;
        let eps = params.fair_eps;
        match self {
            Property::ClosureAdd => closure_binary(self.name(), a, &inputs[1], add),
            Property::ClosureMul => closure_binary(self.name(), a, &inputs[1], mul),
            Property::ClosureInverse => {
                a.as_2x2()?;
                let inv = inverse2(a, tol)?;
                let rhs = 1e-12 + 2.0 * max_defect(a);
                Ok(CheckRecord::bound(self.name(), max_defect(&inv), rhs).into())
            }
            Property::ClosureTranspose => {
                let t = transpose(a);
                let gap = (balance_defect(a, Axis::Rows) - balance_defect(&t, Axis::Columns)).abs()
                    + (balance_defect(a, Axis::Columns) - balance_defect(&t, Axis::Rows)).abs();
                Ok(CheckRecord::bound(self.name(), gap, 0.0).into())
            }
            Property::ClosureScale => {
                let lambda = inputs[1].get(0, 0);
                if lambda == 0.0 {
                    return Err(Error::InvalidInput("scale factor must be non-zero".into()));
                }
                let s = crate::algebra::scale(lambda, a);
                let gap = [Axis::Rows, Axis::Columns]
                    .iter()
                    .map(|&ax| (relative_defect(a, ax) - relative_defect(&s, ax)).abs())
                    .fold(0.0, f64::max);
                Ok(CheckRecord::bound(self.name(), gap, 1e-12).into())
            }
            Property::DetTrail => {
                let trail = det_via_trail(a, params.pivot_tol)?;
                let oracle = cofactor_det(a)?;
                let allowed = 1e-9 * oracle.abs() + 1e-12 * hadamard_bound(a);
                Ok(CheckRecord::within(self.name(), trail, oracle, allowed).into())
            }
            Property::DetNonzero => {
                if !classify_balance(a, tol).fully_balanced {
                    return Err(Error::hypothesis(Hypothesis::NotBalanced));
                }
                let first = a.entries()[0].abs();
                if a.entries().iter().all(|x| tol.close(x.abs(), first)) {
                    return Ok(CheckOutcome::NotApplicable {
                        reason: "all entry moduli are equal".into(),
                    });
                }
                let det = det_via_trail(a, params.pivot_tol)?;
                Ok(CheckRecord::bound(self.name(), params.pivot_tol, det.abs()).into())
            }
            Property::EstimatorExact => {
                let est = estimate_spectrum2(a, tol)?;
                let exact = exact_spectrum2(a)?;
                if exact.is_complex {
                    return Err(Error::hypothesis(Hypothesis::ComplexSpectrum));
                }
                let err = estimator_error(est.max_estimate, est.min_estimate, &exact);
                Ok(CheckRecord::bound(self.name(), err, 1e-9).into())
            }
            Property::Quadform => {
                let branch = quadform_branch_select(a, tol)?;
                estimate_spectrum2(a, tol)?;
                let exact = exact_spectrum2(a)?;
                let mut worst: f64 = 0.0;
                for &x in &QUADFORM_GRID {
                    for &y in &QUADFORM_GRID {
                        let eval = quadform_eval(a, x, y)?;
                        let pred = quadform_predict(&exact, branch, x, y);
                        worst = worst.max((pred - eval).abs() / eval.abs().max(1.0));
                    }
                }
                Ok(CheckRecord::bound(self.name(), worst, 1e-9).into())
            }
            Property::TraceEntry => Ok(trace_entry_check(a, tol)?.into()),
            Property::EmaxAdditivity => Ok(emax_additivity_check(a, &inputs[1], tol)?.into()),
            Property::Homomorphism => Ok(det_homomorphism_check(a, &inputs[1], tol, eps)?.into()),
            Property::HomomorphismNxn => homomorphism_nxn(a, &inputs[1], params),
            Property::FairnessTransfer => fairness_transfer_check(a, tol, eps),
            Property::OneFairRow => one_fair_row_check(a, tol, eps, params.unfair_theta),
            Property::Edos => fairness_propagation_check(a, tol, eps),
            Property::InteriorConjecture => {
                interior_conjecture(self.name(), a, tol, InteriorMode::Contiguous)
            }
            Property::InteriorSubsetConjecture => {
                interior_conjecture(self.name(), a, tol, InteriorMode::Subset)
            }
            Property::InteriorCorollary => interior_corollary_check(a, tol, eps),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown property {s:?}")))
    }
}

fn max_defect(a: &Matrix) -> f64 {
    balance_defect(a, Axis::Rows).max(balance_defect(a, Axis::Columns))
}

fn closure_binary(
    name: &str,
    a: &Matrix,
    b: &Matrix,
    op: fn(&Matrix, &Matrix) -> Result<Matrix>,
) -> Result<CheckOutcome> {
    a.as_2x2()?;
    b.as_2x2()?;
    if a.min_entry() <= 0.0 || b.min_entry() <= 0.0 {
        return Err(Error::hypothesis(Hypothesis::NotPositive));
    }
    let out = op(a, b)?;
    let rhs = 1e-12 + 2.0 * (max_defect(a) + max_defect(b));
    Ok(CheckRecord::bound(name, max_defect(&out), rhs).into())
}

fn estimator_error(
    max_estimate: f64,
    min_estimate: f64,
    exact: &crate::spectral2::Spectrum2,
) -> f64 {
    (max_estimate - exact.max_modulus())
        .abs()
        .max((min_estimate - exact.min_modulus()).abs())
}

fn homomorphism_nxn(a: &Matrix, b: &Matrix, params: &CampaignParams) -> Result<CheckOutcome> {
    let tol = params.tol;
    let n = a.n_rows();
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::Dimension(
            "homomorphism check needs two square matrices of one size".into(),
        ));
    }
    if a.min_entry() < 1.0 || b.min_entry() < 1.0 {
        return Err(Error::hypothesis(Hypothesis::EntryBelowOne));
    }
    if !classify_balance(a, tol).fully_balanced || !classify_balance(b, tol).fully_balanced {
        return Err(Error::hypothesis(Hypothesis::NotBalanced));
    }
    let d = discrepancy_report(b, params.fair_eps)?;
    if !fair_within(d.max_row_deviation, params.fair_eps, tol)
        && !fair_within(d.max_col_deviation, params.fair_eps, tol)
    {
        return Err(Error::hypothesis(Hypothesis::NotFair));
    }
    let det_a = det_via_trail(a, params.pivot_tol)?;
    if det_a.abs() > tol.atol + tol.rtol * hadamard_bound(a) {
        return Err(Error::hypothesis(Hypothesis::MinEigenNotSmall));
    }
    let sum = add(a, b)?;
    let det_sum = det_via_trail(&sum, params.pivot_tol)?;
    let det_b = det_via_trail(b, params.pivot_tol)?;
    let lhs = (det_sum - det_a - det_b).abs();
    // reduces to 4·ε·max(A) for n = 2
    let rhs = 4.0 * params.fair_eps * a.max_entry() * b.max_entry().powi(n as i32 - 2)
        + tol.allowance(det_sum, det_a + det_b)
        + 1e-12 * hadamard_bound(&sum);
    Ok(CheckRecord::bound("homomorphism_nxn", lhs, rhs).into())
}

fn interior_conjecture(
    name: &str,
    a: &Matrix,
    tol: TolerancePolicy,
    mode: InteriorMode,
) -> Result<CheckOutcome> {
    let found = find_balanced_interior_with(a, tol, 2, mode)?;
    let missing = if found.is_some() { 0.0 } else { 1.0 };
    Ok(CheckRecord::bound(name, missing, 0.0).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignParams {
    pub tol: TolerancePolicy,
    pub fair_eps: f64,
    pub unfair_theta: f64,
    pub pivot_tol: f64,
}

impl Default for CampaignParams {
    fn default() -> Self {
        CampaignParams {
            tol: TolerancePolicy::default(),
            fair_eps: 0.1,
            unfair_theta: 1.0,
            pivot_tol: DEFAULT_PIVOT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: u64,
    pub inputs: Vec<Matrix>,
    pub record: CheckRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub property_name: String,
    pub conjecture: bool,
    pub kind: GenKind,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    pub trials: u64,
    pub passes: u64,
    pub violations: u64,
    pub not_applicable: u64,
    /// Largest slack over all checked trials; `None` when nothing was checked.
    pub worst_slack: Option<f64>,
    /// First violations in trial order, at most [`COUNTEREXAMPLE_CAP`].
    pub counterexamples: Vec<Counterexample>,
    /// `(balance defect, estimator error)` per checked trial, for campaigns
    /// that measure an estimator.
    pub defect_error_pairs: Vec<(f64, f64)>,
    /// Smallest `C` with `error <= C · defect · max|entry|` over the pairs
    /// with non-zero defect.
    pub error_scaling: Option<f64>,
}

struct Trial {
    index: u64,
    inputs: Vec<Matrix>,
    outcome: CheckOutcome,
    sample: Option<(f64, f64, f64)>,
}

fn is_inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::Hypothesis { .. } | Error::Singular { .. } | Error::Asymmetric { .. }
    )
}

fn run_trial(
    property: Property,
    spec: &GenSpec,
    params: &CampaignParams,
    index: u64,
) -> Result<Trial> {
    let mut rng = trial_rng(spec.seed, index);
    let inputs = property.generate_inputs(spec, &mut rng)?;
    let outcome = match property.check(&inputs, params) {
        Ok(o) => o,
        Err(e) if is_inapplicable(&e) => CheckOutcome::NotApplicable {
            reason: e.to_string(),
        },
        Err(e) => return Err(e),
    };
    let sample = match (&outcome, property) {
        (CheckOutcome::Checked(r), Property::EstimatorExact) => {
            Some((max_defect(&inputs[0]), r.lhs, inputs[0].max_abs()))
        }
        _ => None,
    };
    Ok(Trial {
        index,
        inputs,
        outcome,
        sample,
    })
}

/// Runs `trials` seeded trials of the named property and aggregates them.
///
/// Trials run in parallel; aggregation happens in trial order, so the
/// report depends only on the arguments.
pub fn fuzz_campaign(
    property_name: &str,
    spec: &GenSpec,
    trials: u64,
    params: &CampaignParams,
) -> Result<FuzzReport> {
    let property: Property = property_name.parse()?;
    if trials == 0 {
        return Err(Error::Config("a campaign needs at least one trial".into()));
    }
    spec.validate()?;
    property.check_dimension(spec.n)?;
    if !(params.fair_eps > 0.0)
        || !(params.pivot_tol > 0.0)
        || !(params.unfair_theta > params.fair_eps)
    {
        return Err(Error::Config(format!(
            "need fair_eps > 0, pivot_tol > 0 and theta > fair_eps (got {}, {}, {})",
            params.fair_eps, params.pivot_tol, params.unfair_theta
        )));
    }

    let results: Vec<Result<Trial>> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(property, spec, params, i))
        .collect();

    let mut report = FuzzReport {
        property_name: property.name().to_string(),
        conjecture: property.is_conjecture(),
        kind: spec.kind,
        n: spec.n,
        noise: spec.noise,
        seed: spec.seed,
        trials,
        passes: 0,
        violations: 0,
        not_applicable: 0,
        worst_slack: None,
        counterexamples: Vec::new(),
        defect_error_pairs: Vec::new(),
        error_scaling: None,
    };
    for trial in results {
        let trial = trial?;
        if let Some((defect, err, magnitude)) = trial.sample {
            report.defect_error_pairs.push((defect, err));
            if defect > 0.0 && magnitude > 0.0 {
                let c = err / (defect * magnitude);
                report.error_scaling = Some(report.error_scaling.map_or(c, |w| w.max(c)));
            }
        }
        match trial.outcome {
            CheckOutcome::NotApplicable { .. } => report.not_applicable += 1,
            CheckOutcome::Checked(record) => {
                report.worst_slack = Some(
                    report
                        .worst_slack
                        .map_or(record.slack, |w| w.max(record.slack)),
                );
                if record.holds {
                    report.passes += 1;
                } else {
                    report.violations += 1;
                    if report.counterexamples.len() < COUNTEREXAMPLE_CAP {
                        report.counterexamples.push(Counterexample {
                            trial: trial.index,
                            inputs: trial.inputs,
                            record,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Re-runs a stored counterexample.
pub fn replay(
    property_name: &str,
    counterexample: &Counterexample,
    params: &CampaignParams,
) -> Result<CheckOutcome> {
    let property: Property = property_name.parse()?;
    property.check(&counterexample.inputs, params)
}
