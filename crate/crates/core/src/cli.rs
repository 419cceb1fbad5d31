//! The `balmat` command: CSV matrices in, text or JSON reports out.
//!
//! JSON reports are a single object `{command, input, params, result}`
//! written on one line, with every real printed to 17 significant digits so
//! that parsing and re-serializing a report reproduces it byte for byte.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{det_via_trail, rref_with_trail};
use crate::balance::classify_balance;
use crate::discrepancy::{
    discrepancy_report, fairness_propagation_check, fairness_transfer_check,
    find_balanced_interior_with, interior_corollary_check, one_fair_row_check, InteriorMode,
};
use crate::error::{Error, Result};
use crate::genfuzz::{fuzz_campaign, CampaignParams, GenKind, GenSpec, QUADFORM_GRID};
use crate::matrix::Matrix;
use crate::spectral2::{
    estimate_spectrum2, exact_spectrum2, quadform_branch_select, quadform_coefficients,
    quadform_eval, quadform_predict,
};
use crate::tolerance::{CheckOutcome, TolerancePolicy};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "balmat",
    version,
    about = "Balanced-matrix analysis and conjecture fuzzing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Relative tolerance for approximate comparisons.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub rtol: f64,

    /// Absolute tolerance for approximate comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub atol: f64,

    /// Fairness threshold ε for row/column deviations.
    #[arg(long = "fair-eps", global = true, default_value_t = 0.1)]
    pub fair_eps: f64,

    /// Unfairness threshold Θ.
    #[arg(long = "theta", global = true, default_value_t = 1.0)]
    pub unfair_theta: f64,

    /// Pivots at or below this magnitude count as zero during elimination.
    #[arg(long = "pivot-tol", global = true, default_value_t = 1e-10)]
    pub pivot_tol: f64,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Classify a matrix as horizontally, vertically or fully balanced.
    Check { input: PathBuf },
    /// Exact 2x2 spectrum against the entry-sum estimate.
    Spectrum { input: PathBuf },
    /// Predicted quadratic-form coefficients and a grid comparison.
    Quadform { input: PathBuf },
    /// Row/column discrepancy and the fairness checks.
    Discrepancy { input: PathBuf },
    /// Determinant, rank and trail length from row reduction.
    Det { input: PathBuf },
    /// Search for a fully balanced square interior.
    Interior {
        input: PathBuf,
        #[arg(long = "min-dim", default_value_t = 2)]
        min_dim: usize,
        #[arg(long, value_enum, default_value_t = InteriorMode::Contiguous)]
        mode: InteriorMode,
    },
    /// Run a seeded property campaign.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FuzzArgs {
    /// Registered property name, e.g. closure_add or interior_conjecture.
    #[arg(long)]
    pub property: String,
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "entry-low", default_value_t = 1.0)]
    pub entry_low: f64,
    #[arg(long = "entry-high", default_value_t = 100.0)]
    pub entry_high: f64,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Spectrum { .. } => "spectrum",
            Command::Quadform { .. } => "quadform",
            Command::Discrepancy { .. } => "discrepancy",
            Command::Det { .. } => "det",
            Command::Interior { .. } => "interior",
            Command::Fuzz(_) => "fuzz",
        }
    }

    fn input_path(&self) -> Option<&Path> {
        match self {
            Command::Check { input }
            | Command::Spectrum { input }
            | Command::Quadform { input }
            | Command::Discrepancy { input }
            | Command::Det { input }
            | Command::Interior { input, .. } => Some(input),
            Command::Fuzz(_) => None,
        }
    }
}

/// Parses comma-separated rows. Fields may carry surrounding whitespace;
/// trailing blank lines are ignored.
pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: None,
            message: "no rows".into(),
        });
    }
    let mut entries = Vec::new();
    let mut width = 0;
    for (i, line) in lines.iter().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                column: None,
                message: "blank row".into(),
            });
        }
        let mut count = 0;
        for (j, field) in line.split(',').enumerate() {
            let field = field.trim();
            let value: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    column: Some(j + 1),
                    message: format!("not a finite number: {field:?}"),
                })?;
            entries.push(value);
            count += 1;
        }
        if i == 0 {
            width = count;
        } else if count != width {
            return Err(Error::Parse {
                line: line_no,
                column: None,
                message: format!("expected {width} fields, found {count}"),
            });
        }
    }
    Matrix::new(lines.len(), width, entries)
}

/// Writes one line per row using the shortest representation that parses
/// back to the same value.
pub fn serialize_csv(a: &Matrix) -> String {
    let mut out = String::new();
    for row in a.rows() {
        let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `x` to 17 significant digits, positional for exponents in `[-5, 17)`
/// and scientific otherwise, with trailing zeros removed. Always contains a
/// `.` or an `e` so it reads back as a float.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let mut s = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&mut s);
        s
    } else {
        let mut m = mantissa.to_string();
        trim_fraction(&mut m);
        let m = m.strip_suffix(".0").unwrap_or(&m);
        format!("{m}e{exp}")
    }
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.push('0');
        }
    } else {
        s.push_str(".0");
    }
}

struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with reals at 17 significant digits.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value)
        .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))
}

/// Hypothesis failures become not-applicable entries so one bad premise
/// does not hide the other checks.
fn outcome_or_skip(r: Result<CheckOutcome>) -> Result<CheckOutcome> {
    match r {
        Err(Error::Hypothesis { hypothesis }) => Ok(CheckOutcome::NotApplicable {
            reason: format!("hypothesis failed: {hypothesis}"),
        }),
        other => other,
    }
}

impl CommonArgs {
    fn tolerance(&self) -> Result<TolerancePolicy> {
        TolerancePolicy::new(self.rtol, self.atol)
    }

    fn validate(&self) -> Result<()> {
        self.tolerance()?;
        if !(self.fair_eps > 0.0 && self.fair_eps.is_finite()) {
            return Err(Error::Config(format!(
                "--fair-eps must be positive, got {}",
                self.fair_eps
            )));
        }
        if !(self.unfair_theta > self.fair_eps && self.unfair_theta.is_finite()) {
            return Err(Error::Config(format!(
                "--theta must exceed --fair-eps, got {} <= {}",
                self.unfair_theta, self.fair_eps
            )));
        }
        if !(self.pivot_tol > 0.0 && self.pivot_tol.is_finite()) {
            return Err(Error::Config(format!(
                "--pivot-tol must be positive, got {}",
                self.pivot_tol
            )));
        }
        Ok(())
    }

    fn params(&self) -> Value {
        json!({
            "rtol": self.rtol,
            "atol": self.atol,
            "fair_eps": self.fair_eps,
            "theta": self.unfair_theta,
            "pivot_tol": self.pivot_tol,
        })
    }
}

fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_csv(&text)
}

/// Runs one command and returns the report object.
pub fn run(cli: &Cli) -> Result<Value> {
    let common = &cli.common;
    common.validate()?;
    let tol = common.tolerance()?;
    let mut params = common.params();

    let (input, result) = match &cli.command {
        Command::Fuzz(f) => {
            let spec = GenSpec {
                kind: f.kind,
                n: f.n,
                entry_low: f.entry_low,
                entry_high: f.entry_high,
                noise: f.noise,
                seed: f.seed,
            };
            let campaign = CampaignParams {
                tol,
                fair_eps: common.fair_eps,
                unfair_theta: common.unfair_theta,
                pivot_tol: common.pivot_tol,
            };
            let report = fuzz_campaign(&f.property, &spec, f.trials, &campaign)?;
            let input =
                json!({ "property": f.property, "spec": to_value(&spec)?, "trials": f.trials });
            (input, to_value(&report)?)
        }
        command => {
            let path = command.input_path().expect("file command");
            let a = read_matrix(path)?;
            let input = json!({ "path": path.display().to_string(), "rows": to_value(&a)? });
            let result = match command {
                Command::Check { .. } => to_value(&classify_balance(&a, tol))?,
                Command::Spectrum { .. } => {
                    let exact = exact_spectrum2(&a)?;
                    let estimate = estimate_spectrum2(&a, tol)?;
                    let error = (estimate.max_estimate - exact.max_modulus())
                        .abs()
                        .max((estimate.min_estimate - exact.min_modulus()).abs());
                    json!({ "exact": to_value(&exact)?, "estimate": to_value(&estimate)?, "error": error })
                }
                Command::Quadform { .. } => quadform_result(&a, tol)?,
                Command::Discrepancy { .. } => {
                    let report = discrepancy_report(&a, common.fair_eps)?;
                    let eps = common.fair_eps;
                    let checks = json!({
                        "fairness_transfer": to_value(&outcome_or_skip(fairness_transfer_check(&a, tol, eps))?)?,
                        "one_fair_row": to_value(&outcome_or_skip(one_fair_row_check(&a, tol, eps, common.unfair_theta))?)?,
                        "fairness_propagation": to_value(&outcome_or_skip(fairness_propagation_check(&a, tol, eps))?)?,
                        "interior_corollary": to_value(&outcome_or_skip(interior_corollary_check(&a, tol, eps))?)?,
                    });
                    json!({ "report": to_value(&report)?, "checks": checks })
                }
                Command::Det { .. } => {
                    let rref = rref_with_trail(&a, common.pivot_tol)?;
                    let det = det_via_trail(&a, common.pivot_tol)?;
                    json!({
                        "det": det,
                        "rank": rref.rank,
                        "trail_length": rref.trail.len(),
                        "pivot_cols": rref.pivot_cols,
                    })
                }
                Command::Interior { min_dim, mode, .. } => {
                    params["min_dim"] = json!(min_dim);
                    params["mode"] = to_value(mode)?;
                    let hit = find_balanced_interior_with(&a, tol, *min_dim, *mode)?;
                    json!({ "found": hit.is_some(), "hit": to_value(&hit)? })
                }
                Command::Fuzz(_) => unreachable!(),
            };
            (input, result)
        }
    };
    Ok(json!({
        "command": cli.command.name(),
        "input": input,
        "params": params,
        "result": result,
    }))
}

fn quadform_result(a: &Matrix, tol: TolerancePolicy) -> Result<Value> {
    let branch = quadform_branch_select(a, tol)?;
    let spectrum = exact_spectrum2(a)?;
    let (x2, xy, y2) = quadform_coefficients(&spectrum, branch);
    let mut grid = Vec::new();
    let mut max_error: f64 = 0.0;
    for &x in &QUADFORM_GRID {
        for &y in &QUADFORM_GRID {
            let evaluated = quadform_eval(a, x, y)?;
            let predicted = quadform_predict(&spectrum, branch, x, y);
            let error = (predicted - evaluated).abs();
            max_error = max_error.max(error / evaluated.abs().max(1.0));
            grid.push(json!({ "x": x, "y": y, "predicted": predicted, "evaluated": evaluated, "error": error }));
        }
    }
    Ok(json!({
        "branch": branch.as_str(),
        "spectrum": to_value(&spectrum)?,
        "coefficients": { "x2": x2, "xy": xy, "y2": y2 },
        "grid": grid,
        "max_relative_error": max_error,
    }))
}

/// Renders a report as `dotted.path: value` lines.
pub fn render_text(report: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let p = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&p, x, out);
                }
            }
            Value::Array(items) if items.iter().any(Value::is_object) => {
                for (i, x) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, out);
                }
            }
            Value::String(s) => {
                let _ = writeln!(out, "{prefix}: {s}");
            }
            other => {
                let _ = writeln!(out, "{prefix}: {other}");
            }
        }
    }
    let mut out = String::new();
    walk("", report, &mut out);
    out
}

pub fn render(report: &Value, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Text => render_text(report),
        OutputFormat::Json => to_json_string(report)? + "\n",
    })
}

/// Parses `args`, runs the command and writes the report. Returns the
/// process exit status: 0 on success, 1 for usage, input and hypothesis
/// errors, 2 for internal failures.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        run(&cli).and_then(|report| render(&report, cli.common.format))
    }));
    match outcome {
        Ok(Ok(text)) => {
            let mut stdout = io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return 2;
            }
            0
        }
        Ok(Err(e)) => {
            eprintln!("balmat: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("balmat: internal error");
            2
        }
    }
}
