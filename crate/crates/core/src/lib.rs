//! Balanced-matrix analysis.
//!
//! A matrix is *horizontally balanced* when all of its rows carry the same
//! sum of squared entries, *vertically balanced* when its columns do, and
//! *fully balanced* when both hold. This crate classifies matrices against
//! that definition (with an explicit tolerance policy), checks the closure,
//! spectral, determinant and discrepancy properties that balanced matrices
//! are claimed to have, and fuzzes those claims with seeded generators.
//!
//! Modules:
//!
//! - [`matrix`] and [`tolerance`]: the dense matrix type, approximate
//!   comparison and the uniform [`CheckRecord`] result carrier.
//! - [`balance`]: square sums, balance defects and classification.
//! - [`algebra`]: elementwise/product operations, the 2x2 inverse and
//!   reduced row echelon form with an elementary-operation trail.
//! - [`spectral2`]: exact 2x2 eigenvalues, the entry-sum estimator,
//!   quadratic-form prediction and the determinant homomorphism check.
//! - [`discrepancy`]: row/column discrepancy, fairness checks and interior
//!   search.
//! - [`genfuzz`]: matrix families on the balanced manifold and property
//!   campaigns.
//! - [`cli`]: CSV input, JSON/text reports and the `balmat` command.

// NaN must fail parameter validation, so `!(x > y)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod balance;
pub mod cli;
pub mod discrepancy;
pub mod error;
pub mod genfuzz;
pub mod matrix;
pub mod spectral2;
pub mod tolerance;

pub use error::{Error, Hypothesis, Result};
pub use matrix::Matrix;
pub use tolerance::{approx_eq, CheckOutcome, CheckRecord, TolerancePolicy};
