//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use balmat::algebra::{
    add, det_via_trail, inverse2, mul, rref_with_trail, scale, transpose, DEFAULT_PIVOT_TOL,
};
use balmat::balance::{balance_defect, relative_defect, Axis};
use balmat::cli::{parse_matrix_csv, serialize_csv, to_json_string};
use balmat::discrepancy::{discrepancy_report, fairness_transfer_check};
use balmat::genfuzz::{
    fuzz_campaign, generate_with_rng, replay, symmetric2, trial_rng, CampaignParams, FuzzReport,
    GenKind, GenSpec,
};
use balmat::spectral2::{
    det_homomorphism_check, estimate_spectrum2, exact_spectrum2, quadform_branch_select,
    quadform_predict, QuadBranch,
};
use balmat::{CheckOutcome, Matrix, TolerancePolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const SEED: u64 = 20240917;

fn symmetric2_fixtures(count: u64, seed: u64) -> Vec<Matrix> {
    let spec = GenSpec::new(GenKind::Symmetric2, 2)
        .with_range(1.0, 100.0)
        .with_seed(seed);
    (0..count)
        .map(|t| generate_with_rng(&spec, &mut trial_rng(seed, t)).unwrap())
        .collect()
}

/// (max - min) / max(1, max) of the square sums, computed independently of
/// the library.
fn defect_oracle(a: &Matrix) -> f64 {
    let rows: Vec<f64> = (0..a.n_rows())
        .map(|i| (0..a.n_cols()).map(|j| a.get(i, j).powi(2)).sum())
        .collect();
    let cols: Vec<f64> = (0..a.n_cols())
        .map(|j| (0..a.n_rows()).map(|i| a.get(i, j).powi(2)).sum())
        .collect();
    let spread = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi.max(1.0)
    };
    spread(&rows).max(spread(&cols))
}

/// Leibniz formula over all permutations.
fn leibniz_det(a: &Matrix) -> f64 {
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }
    let n = a.n_rows();
    perms(n)
        .into_iter()
        .map(|p| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            sign * (0..n).map(|i| a.get(i, p[i])).product::<f64>()
        })
        .sum()
}

/// Reduced row echelon form: zero rows last, each other row leads with a 1
/// strictly right of the row above, and pivot columns are otherwise zero.
fn echelon_oracle(r: &Matrix, zero: f64) -> bool {
    let mut prev: Option<usize> = None;
    let mut zero_seen = false;
    for i in 0..r.n_rows() {
        let lead = (0..r.n_cols()).find(|&j| r.get(i, j).abs() > zero);
        match lead {
            None => zero_seen = true,
            Some(j) => {
                if zero_seen || prev.is_some_and(|p| j <= p) || (r.get(i, j) - 1.0).abs() > zero {
                    return false;
                }
                if (0..r.n_rows()).any(|k| k != i && r.get(k, j).abs() > zero) {
                    return false;
                }
                prev = Some(j);
            }
        }
    }
    true
}

fn hadamard_bound(a: &Matrix) -> f64 {
    a.rows()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .product()
}

fn criterion_1() -> Outcome {
    let fixtures = symmetric2_fixtures(1000, SEED);
    let tol = TolerancePolicy::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for a in &fixtures {
        let est = estimate_spectrum2(a, tol).map_err(|e| e.to_string())?;
        // [[p, q], [q, p]] has eigenvalues p ± q
        let (p, q) = (a.get(0, 0), a.get(0, 1));
        let (big, small) = (
            (p + q).abs().max((p - q).abs()),
            (p + q).abs().min((p - q).abs()),
        );
        let err = (est.max_estimate - big)
            .abs()
            .max((est.min_estimate - small).abs());
        ensure!(err <= 1e-9, "estimator error {err:e} on {a:?}");
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("1000 trials, worst error {worst:e}, {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let fixtures = symmetric2_fixtures(1000, SEED);
    let tol = TolerancePolicy::default();
    let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let start = Instant::now();
    let (mut gt, mut lt) = (0, 0);
    let mut worst: f64 = 0.0;
    for a in &fixtures {
        let branch = quadform_branch_select(a, tol).map_err(|e| e.to_string())?;
        match branch {
            QuadBranch::BGtA => gt += 1,
            QuadBranch::BLtA => lt += 1,
        }
        let spectrum = exact_spectrum2(a).map_err(|e| e.to_string())?;
        let (p, q, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 1));
        for &x in &grid {
            for &y in &grid {
                let eval: f64 = p * x * x + 2.0 * q * x * y + s * y * y;
                let pred = quadform_predict(&spectrum, branch, x, y);
                let gap = (pred - eval).abs();
                ensure!(
                    gap <= 1e-9 * eval.abs().max(1.0),
                    "gap {gap:e} at ({x}, {y}) on {a:?}"
                );
                worst = worst.max(gap / eval.abs().max(1.0));
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(
        gt > 0 && lt > 0,
        "branches exercised: b_gt_a {gt}, b_lt_a {lt}"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "b_gt_a {gt}, b_lt_a {lt}, worst relative gap {worst:e}, {elapsed:?}"
    ))
}

fn criterion_3() -> Outcome {
    let left = symmetric2_fixtures(1000, SEED);
    let right = symmetric2_fixtures(1000, SEED + 1);
    let tol = TolerancePolicy::default();
    let mut worst: f64 = 0.0;
    for (a, b) in left.iter().zip(&right) {
        let outputs = [
            ("add", add(a, b).map_err(|e| e.to_string())?),
            ("mul", mul(a, b).map_err(|e| e.to_string())?),
            ("inverse2", inverse2(a, tol).map_err(|e| e.to_string())?),
        ];
        for (name, m) in &outputs {
            let d = defect_oracle(m);
            ensure!(d <= 1e-12, "{name} defect {d:e} on {a:?}, {b:?}");
            worst = worst.max(d);
        }
    }

    // transpose and scale on matrices that are not balanced
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..1000 {
        let (r, c) = (rng.random_range(1..6), rng.random_range(1..6));
        let a = Matrix::from_fn(r, c, |_, _| rng.random_range(-50.0..50.0));
        let t = transpose(&a);
        ensure!(
            balance_defect(&a, Axis::Rows) == balance_defect(&t, Axis::Columns)
                && balance_defect(&a, Axis::Columns) == balance_defect(&t, Axis::Rows),
            "transpose did not swap defects on {a:?}"
        );
        let lambda = rng.random_range(0.01..100.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let s = scale(lambda, &a);
        for axis in [Axis::Rows, Axis::Columns] {
            let gap = (relative_defect(&a, axis) - relative_defect(&s, axis)).abs();
            ensure!(
                gap <= 1e-12,
                "scale by {lambda} moved relative defect by {gap:e}"
            );
        }
    }
    Ok(format!(
        "1000 pairs, worst closure defect {worst:e}; transpose exact; scale invariant"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 1000 {
        let n = rng.random_range(2..=4);
        let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-10.0..10.0));
        let oracle = leibniz_det(&a);
        // nonsingular, away from the numerically singular set
        if oracle.abs() < 1e-3 * hadamard_bound(&a) {
            continue;
        }
        let det = det_via_trail(&a, DEFAULT_PIVOT_TOL).map_err(|e| e.to_string())?;
        let rel = (det - oracle).abs() / oracle.abs();
        ensure!(rel <= 1e-9, "relative error {rel:e} on {a:?}");
        worst = worst.max(rel);
        count += 1;
    }

    let mut fixtures = vec![
        Matrix::filled(3, 3, 1.0),
        Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap(),
        Matrix::from_rows(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2f64.sqrt()]]).unwrap(),
        Matrix::from_rows(&[
            [1.0, 2.0, 3.0, 4.0],
            [2.0, 4.0, 6.0, 8.0],
            [1.0, 0.0, 1.0, 0.0],
            [2.0, 2.0, 4.0, 4.0],
        ])
        .unwrap(),
        Matrix::zeros(3, 3),
    ];
    // products of small integer factors have exact rank r < n
    for _ in 0..200 {
        let n = rng.random_range(2..=5);
        let r = rng.random_range(1..n);
        let u = Matrix::from_fn(n, r, |_, _| rng.random_range(-5i32..=5) as f64);
        let v = Matrix::from_fn(r, n, |_, _| rng.random_range(-5i32..=5) as f64);
        fixtures.push(mul(&u, &v).unwrap());
    }
    for a in &fixtures {
        let det = det_via_trail(a, DEFAULT_PIVOT_TOL).map_err(|e| e.to_string())?;
        ensure!(
            det == 0.0 && det.is_sign_positive(),
            "det {det:e} on rank-deficient {a:?}"
        );
        let rref = rref_with_trail(a, DEFAULT_PIVOT_TOL).map_err(|e| e.to_string())?;
        ensure!(rref.rank < a.n_rows(), "rank {} on {a:?}", rref.rank);
        ensure!(
            echelon_oracle(&rref.reduced, 1e-9),
            "not in echelon form: {:?}",
            rref.reduced
        );
    }
    let ones = rref_with_trail(&Matrix::filled(3, 3, 1.0), DEFAULT_PIVOT_TOL).unwrap();
    ensure!(ones.rank == 1, "3x3 all-ones rank {}", ones.rank);
    Ok(format!(
        "1000 nonsingular, worst relative error {worst:e}; {} rank-deficient fixtures exactly 0",
        fixtures.len()
    ))
}

fn criterion_5() -> Outcome {
    let tol = TolerancePolicy::default();
    let kinds: Vec<(GenKind, usize)> = vec![
        (GenKind::Constant, 2),
        (GenKind::Constant, 3),
        (GenKind::Constant, 5),
        (GenKind::Symmetric2, 2),
        (GenKind::HadamardLike, 2),
        (GenKind::HadamardLike, 4),
        (GenKind::ScaledOrthogonal, 2),
        (GenKind::ScaledOrthogonal, 3),
        (GenKind::ScaledOrthogonal, 4),
        (GenKind::Perturbed, 4),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut checked, mut worst_ratio, mut identity_gap) = (0, 0.0f64, 0.0f64);
    for t in 0..500u64 {
        let (kind, n) = kinds[t as usize % kinds.len()];
        let spec = GenSpec::new(kind, n).with_seed(SEED);
        let g = generate_with_rng(&spec, &mut trial_rng(SEED, t)).map_err(|e| e.to_string())?;
        // entrywise absolute value keeps every square sum, so the fixture
        // stays balanced and becomes positive
        let a = Matrix::from_fn(n, n, |i, j| g.get(i, j).abs());
        ensure!(defect_oracle(&a) <= 1e-12, "fixture not balanced: {a:?}");
        let dev = discrepancy_report(&a, 1.0).unwrap().max_row_deviation;
        // an ε just above the row deviation makes the rows fair
        let eps = dev * (1.0 + rng.random_range(0.0..1.0)) + 1e-3;
        let outcome = fairness_transfer_check(&a, tol, eps).map_err(|e| e.to_string())?;
        let record = match outcome {
            CheckOutcome::Checked(r) => r,
            CheckOutcome::NotApplicable { reason } => {
                return Err(format!("not applicable ({reason}) on {a:?}"))
            }
        };
        ensure!(
            record.holds,
            "transfer fails at eps {eps}: {record:?} on {a:?}"
        );
        checked += 1;
        worst_ratio = worst_ratio.max(record.lhs / record.rhs);
        if n == 2 {
            let d = discrepancy_report(&a, eps).unwrap();
            let gap = (d.max_row_deviation - d.max_col_deviation).abs();
            ensure!(
                gap <= 1e-12,
                "2x2 row/column deviation gap {gap:e} on {a:?}"
            );
            identity_gap = identity_gap.max(gap);
        }
    }
    Ok(format!(
        "{checked} fixtures checked, worst lhs/rhs {worst_ratio:.3}, 2x2 identity gap {identity_gap:e}"
    ))
}

fn criterion_6() -> Outcome {
    let tol = TolerancePolicy::default();
    let eps = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..500 {
        let alpha = rng.random_range(1.0..100.0);
        let a = Matrix::filled(2, 2, alpha);
        let c = rng.random_range(1.1..100.0);
        let b = symmetric2(
            c + rng.random_range(-eps..=eps),
            c + rng.random_range(-eps..=eps),
        );
        ensure!(
            exact_spectrum2(&a).unwrap().min_modulus() <= 1e-9,
            "A not rank one"
        );
        let record =
            det_homomorphism_check(&a, &b, tol, eps).map_err(|e| format!("{e} on {b:?}"))?;
        ensure!(record.holds, "{record:?} for A = {alpha} ones, B = {b:?}");
        worst_slack = worst_slack.max(record.slack);

        let (a1, a2, a3, a4) = (alpha, alpha, alpha, alpha);
        let (b1, b2, b3, b4) = (b.get(0, 0), b.get(0, 1), b.get(1, 0), b.get(1, 1));
        let full = (a1 + b1) * (a4 + b4) - (a2 + b2) * (a3 + b3);
        let brute = (full - (a1 * a4 - a2 * a3) - (b1 * b4 - b2 * b3)).abs();
        let scale = [
            (a1 + b1) * (a4 + b4),
            (a2 + b2) * (a3 + b3),
            a1 * a4,
            b1 * b4,
        ]
        .iter()
        .fold(1.0f64, |m, x| m.max(x.abs()));
        let gap = (record.lhs - brute).abs();
        ensure!(
            gap <= 1e-12 * scale,
            "lhs {} vs brute force {brute} (scale {scale})",
            record.lhs
        );
        worst_gap = worst_gap.max(gap / scale);
    }
    Ok(format!(
        "500 pairs, worst slack {worst_slack:e}, worst lhs gap {worst_gap:e} relative"
    ))
}

fn criterion_7() -> Outcome {
    let params = CampaignParams::default();
    let mut lines = Vec::new();
    for property in ["interior_conjecture", "edos"] {
        for (kind, noise) in [(GenKind::ScaledOrthogonal, 0.0), (GenKind::Perturbed, 1e-6)] {
            let spec = GenSpec::new(kind, 4).with_noise(noise).with_seed(SEED);
            let first = fuzz_campaign(property, &spec, 200, &params).map_err(|e| e.to_string())?;
            let second = fuzz_campaign(property, &spec, 200, &params).map_err(|e| e.to_string())?;
            ensure!(
                first == second,
                "{property}/{kind}: reports differ between runs"
            );
            ensure!(
                first.passes + first.violations + first.not_applicable == first.trials,
                "{property}/{kind}: counts do not add up"
            );
            ensure!(
                first.counterexamples.is_empty() == (first.violations == 0),
                "{property}/{kind}: counterexamples inconsistent with violations"
            );
            // replay from the serialized report, as a consumer would
            let json = to_json_string(&first).map_err(|e| e.to_string())?;
            let stored: FuzzReport = serde_json::from_str(&json).map_err(|e| e.to_string())?;
            for cx in &stored.counterexamples {
                let outcome = replay(property, cx, &params).map_err(|e| e.to_string())?;
                ensure!(
                    outcome.record().is_some_and(|r| !r.holds),
                    "{property}/{kind}: trial {} does not replay: {outcome:?}",
                    cx.trial
                );
            }
            lines.push(format!(
                "{property}/{kind}: {} pass, {} violate, {} n/a",
                first.passes, first.violations, first.not_applicable
            ));
        }
    }
    Ok(lines.join("; "))
}

fn criterion_8() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let cases = [
        (
            "check",
            "tests/data/sym2.csv",
            "tests/golden/check_sym2.json",
        ),
        (
            "spectrum",
            "tests/data/sym2.csv",
            "tests/golden/spectrum_sym2.json",
        ),
        ("det", "tests/data/ones3.csv", "tests/golden/det_ones3.json"),
    ];
    let mut reports = Vec::new();
    for (command, input, golden) in cases {
        let out = Command::new(env!("CARGO_BIN_EXE_balmat"))
            .current_dir(root)
            .args([command, input, "--format", "json"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            out.status.code() == Some(0),
            "{command} exited with {:?}",
            out.status
        );
        let expected = std::fs::read(root.join(golden)).map_err(|e| format!("{golden}: {e}"))?;
        ensure!(
            out.stdout == expected,
            "{command} output differs from {golden}"
        );
        let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let again = to_json_string(&v).map_err(|e| e.to_string())? + "\n";
        ensure!(
            again.as_bytes() == out.stdout.as_slice(),
            "{command} JSON does not round-trip"
        );
        reports.push(v);
    }

    let check = &reports[0]["result"];
    ensure!(
        check["fully_balanced"] == true
            && check["horizontal_defect"] == 0.0
            && check["vertical_defect"] == 0.0,
        "check result {check}"
    );
    let spectrum = &reports[1]["result"];
    ensure!(
        spectrum["exact"]["lambda1"] == 1.0
            && spectrum["exact"]["lambda2"] == 3.0
            && spectrum["estimate"]["min_estimate"] == 1.0
            && spectrum["estimate"]["max_estimate"] == 3.0
            && spectrum["error"] == 0.0,
        "spectrum result {spectrum}"
    );
    let det = &reports[2]["result"];
    ensure!(det["det"] == 0.0 && det["rank"] == 1, "det result {det}");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..1000 {
        let (r, c) = (rng.random_range(1..8), rng.random_range(1..8));
        let a = Matrix::from_fn(r, c, |_, _| {
            let m: f64 = rng.random_range(-1.0..1.0);
            m * 10f64.powi(rng.random_range(-30..30))
        });
        let back = parse_matrix_csv(&serialize_csv(&a)).map_err(|e| e.to_string())?;
        ensure!(back == a, "CSV round trip changed {a:?}");
    }
    Ok("3 golden reports byte-identical; 1000 CSV round trips exact".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact-case estimator", criterion_1),
        ("quadratic-form reconstruction", criterion_2),
        ("closure suite", criterion_3),
        ("determinant trail", criterion_4),
        ("fairness transfer", criterion_5),
        ("determinant homomorphism", criterion_6),
        ("conjecture instrumentation", criterion_7),
        ("cli contract", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
