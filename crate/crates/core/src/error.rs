use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// A theorem precondition that an input failed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// The matrix is not fully balanced under the tolerance policy.
    NotBalanced,
    /// Some entry is not strictly positive.
    NotPositive,
    /// Some entry is below 1.
    EntryBelowOne,
    /// The smallest eigenvalue modulus is not approximately zero.
    MinEigenNotSmall,
    /// Neither the rows nor the columns have a fair discrepancy.
    NotFair,
    /// The eigenvalues are complex, so moduli comparisons do not apply.
    ComplexSpectrum,
    /// The zero matrix is excluded from the balance definition.
    ZeroMatrix,
}

impl Hypothesis {
    pub fn as_str(self) -> &'static str {
        match self {
            Hypothesis::NotBalanced => "not-balanced",
            Hypothesis::NotPositive => "not-positive",
            Hypothesis::EntryBelowOne => "entry-below-one",
            Hypothesis::MinEigenNotSmall => "min-eig-not-small",
            Hypothesis::NotFair => "not-fair",
            Hypothesis::ComplexSpectrum => "complex-spectrum",
            Hypothesis::ZeroMatrix => "zero-matrix",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is singular (det = {det:e})")]
    Singular { det: f64 },

    #[error("hypothesis failed: {hypothesis}")]
    Hypothesis { hypothesis: Hypothesis },

    #[error("matrix is not symmetric: a12 = {upper}, a21 = {lower}")]
    Asymmetric { upper: f64, lower: f64 },

    #[error("unsupported dimension {n} for generator kind {kind}")]
    UnsupportedDimension { kind: &'static str, n: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn hypothesis(hypothesis: Hypothesis) -> Self {
        Error::Hypothesis { hypothesis }
    }

    /// Process exit status for this error: 1 for input problems the caller
    /// can fix, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}
