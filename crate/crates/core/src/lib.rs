//! Entropic regularization of linear programming.
//!
//! Minimize `c·x + ε Σ (x_i log x_i − x_i)` subject to `Ax = b`, `x ≥ 0`,
//! for a nonnegative integer matrix `A` of full row rank. The regularized
//! optimum `x*(ε)` is the unique positive point of the scaled toric variety
//! `T_{A,c,ε}` on the affine slice `{Ax = b}`, and the curve `ε ↦ x*(ε)`
//! connects the Birch point to an optimal vertex of the LP.
//!
//! The crate provides:
//!
//! - [`model`]: the standard-form problem type, exact integer kernel
//!   computation, and the log-binomial toric membership residual;
//! - [`builders`]: classical optimal transport and conic-coupling
//!   (unbalanced) transport as standard-form LPs;
//! - [`sinkhorn`], [`gis`], [`dual_ascent`]: three scaling-type solvers
//!   for the regularized problem;
//! - [`combinatorics`]: exact lattice-volume and algebraic-degree formulas
//!   for conic coupling, with an exact triangulation oracle;
//! - [`path`]: a predictor-corrector tracker taking `x*(ε)` to the exact
//!   LP vertex as `ε → 0`;
//! - [`oracle`]: brute-force verifiers (vertex enumeration, full-gradient
//!   mirror ascent) used to validate everything else at desk scale;
//! - [`cli`]: the command-line front end.

pub mod builders;
pub mod cli;
pub mod combinatorics;
pub mod dual_ascent;
pub mod exact;
pub mod gis;
mod linalg;
pub mod model;
pub mod oracle;
pub mod path;
pub mod sinkhorn;

pub use model::{EntropicSolution, ResidualReport, StandardFormLP};

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("transport margins are unbalanced: |mu|={0}, |nu|={1}")]
    Unbalanced(f64, f64),
    #[error("cost vector must be integer-valued for toric residuals (entry {index} = {value})")]
    NonIntegerCost { index: usize, value: f64 },
    #[error("vector must be strictly positive (entry {index} = {value})")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("ones vector is not in the row space of A; add a normalization row first")]
    OnesNotInRowSpace(),
    #[error("solver did not converge within {max_iter} iterations (residual {residual:e})")]
    NoConvergence { max_iter: usize, residual: f64 },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
