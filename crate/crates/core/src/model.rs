//! Standard-form problem representation and the toric membership certificate.
//!
//! The residual check encodes the rank condition on `(A; c; H'(x))` as a
//! finite family of log-binomial equations: for every integer kernel vector
//! `u` of the stacked matrix `(A; c)`, a point on the scaled toric variety
//! satisfies `u · (log x + c/ε) = 0` exactly.

use num_bigint::BigInt;

use serde::{Deserialize, Serialize};

use crate::exact::{self, Rat};
use crate::{Error, Result};

/// A standard-form LP: minimize `c·x` subject to `Ax = b`, `x ≥ 0`.
///
/// `A` is a `d × n` nonnegative integer matrix of rank `d` with no zero
/// column. `c` must be integer-valued whenever toric residuals are
/// requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardFormLP {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl StandardFormLP {
    pub fn new(a: Vec<Vec<i64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let lp = StandardFormLP { a, b, c, labels: None };
        lp.check_dims()?;
        Ok(lp)
    }

    fn check_dims(&self) -> Result<()> {
        let d = self.a.len();
        if d == 0 {
            return Err(Error::InvalidProblem("A has no rows".into()));
        }
        let n = self.a[0].len();
        if self.a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch("ragged rows in A".into()));
        }
        if self.b.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "b has length {}, expected {}",
                self.b.len(),
                d
            )));
        }
        if self.c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "c has length {}, expected {}",
                self.c.len(),
                n
            )));
        }
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.a.len()
    }

    pub fn num_cols(&self) -> usize {
        self.a.first().map_or(0, |r| r.len())
    }

    /// `A·x` in floating point.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .map(|row| row.iter().zip(x).map(|(&a, &v)| a as f64 * v).sum())
            .collect()
    }

    /// `Aᵀ·p` in floating point.
    pub fn apply_transpose(&self, p: &[f64]) -> Vec<f64> {
        let n = self.num_cols();
        let mut out = vec![0.0; n];
        for (row, &pi) in self.a.iter().zip(p) {
            for (j, &a) in row.iter().enumerate() {
                out[j] += a as f64 * pi;
            }
        }
        out
    }

    /// `‖Ax − b‖_∞`.
    pub fn primal_infeasibility(&self, x: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }

    /// The cost vector as exact integers, or an error on any non-integer
    /// entry.
    pub fn integer_cost(&self) -> Result<Vec<i64>> {
        self.c
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if value.fract() == 0.0 && value.abs() < 2f64.powi(53) {
                    Ok(value as i64)
                } else {
                    Err(Error::NonIntegerCost { index, value })
                }
            })
            .collect()
    }

    pub fn cost_of(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }
}

/// Residual summary for a candidate solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `‖Ax − b‖_∞`.
    pub primal_inf: f64,
    /// Max log-binomial violation over the kernel basis of `(A; c)`.
    pub toric_inf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_gap: Option<f64>,
}

/// The regularized optimum `x*(ε)` with its dual potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropicSolution {
    /// Strictly positive primal point.
    pub x: Vec<f64>,
    /// Dual potentials, one per row of `A`.
    pub p: Vec<f64>,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: ResidualReport,
}

/// Exact integer basis of the kernel of an integer matrix. Each vector
/// has content 1 and first nonzero entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerKernelBasis {
    pub vectors: Vec<Vec<BigInt>>,
}

/// Outcome of [`validate`]: report-style, callers reject when `!ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    pub zero_columns: Vec<usize>,
    pub negative_entries: Vec<(usize, usize)>,
    pub ok: bool,
}

/// Check the structural invariants of a standard-form LP.
pub fn validate(lp: &StandardFormLP) -> ValidationReport {
    let d = lp.num_rows();
    let n = lp.num_cols();
    let zero_columns: Vec<usize> = (0..n)
        .filter(|&j| lp.a.iter().all(|row| row[j] == 0))
        .collect();
    let mut negative_entries = Vec::new();
    for (i, row) in lp.a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0 {
                negative_entries.push((i, j));
            }
        }
    }
    let rank = exact::rank_i64(&lp.a);
    let ok = d >= 1
        && n >= d
        && rank == d
        && zero_columns.is_empty()
        && negative_entries.is_empty();
    ValidationReport { rank, rows: d, cols: n, zero_columns, negative_entries, ok }
}

/// Exact integer kernel basis of `m`, one vector per free column.
pub fn integer_kernel(m: &[Vec<i64>]) -> IntegerKernelBasis {
    IntegerKernelBasis { vectors: exact::integer_kernel_basis(m) }
}

/// Precomputed toric membership certificate for a fixed `(A, c)`.
///
/// Evaluating the certificate at many iterates avoids recomputing the
/// kernel basis each time.
pub struct ToricCertificate {
    kernel: Vec<Vec<f64>>,
    cost: Vec<f64>,
}

impl ToricCertificate {
    pub fn new(lp: &StandardFormLP) -> Result<Self> {
        let c_int = lp.integer_cost()?;
        let mut stacked = lp.a.clone();
        stacked.push(c_int.clone());
        let kernel = exact::integer_kernel_basis(&stacked)
            .into_iter()
            .map(|u| u.iter().map(big_to_f64).collect())
            .collect();
        let cost = c_int.iter().map(|&v| v as f64).collect();
        Ok(ToricCertificate { kernel, cost })
    }

    /// `max_u |u · (log x + c/ε)|` over the kernel basis of `(A; c)`.
    pub fn violation(&self, x: &[f64], epsilon: f64) -> Result<f64> {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::NonPositiveEntry { index, value });
        }
        let shifted: Vec<f64> = x
            .iter()
            .zip(&self.cost)
            .map(|(&xi, &ci)| xi.ln() + ci / epsilon)
            .collect();
        Ok(self
            .kernel
            .iter()
            .map(|u| u.iter().zip(&shifted).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max))
    }
}

fn big_to_f64(v: &BigInt) -> f64 {
    v.to_string().parse().unwrap_or(f64::NAN)
}

/// Primal and toric residuals of `x` against `(lp, ε)`.
pub fn toric_residual(lp: &StandardFormLP, x: &[f64], epsilon: f64) -> Result<ResidualReport> {
    if x.len() != lp.num_cols() {
        return Err(Error::DimensionMismatch("x length != n".into()));
    }
    let cert = ToricCertificate::new(lp)?;
    Ok(ResidualReport {
        primal_inf: lp.primal_infeasibility(x),
        toric_inf: cert.violation(x, epsilon)?,
        dual_gap: None,
    })
}

/// Residuals of a solver output, with a dual gap when potentials are
/// available. Falls back to a row-space least-squares residual when `c`
/// has non-integer entries (the kernel certificate needs integer data).
pub fn solution_report(
    lp: &StandardFormLP,
    x: &[f64],
    p: Option<&[f64]>,
    epsilon: f64,
) -> ResidualReport {
    let primal_inf = lp.primal_infeasibility(x);
    let toric_inf = match ToricCertificate::new(lp) {
        Ok(cert) => cert.violation(x, epsilon).unwrap_or(f64::INFINITY),
        Err(_) => rowspace_toric_residual(lp, x, epsilon),
    };
    let dual_gap = p.map(|p| {
        let entropy: f64 = x.iter().map(|&v| v * v.ln() - v).sum();
        let primal = lp.cost_of(x) + epsilon * entropy;
        let bp: f64 = lp.b.iter().zip(p).map(|(&b, &pi)| b * pi).sum();
        let barrier: f64 = lp
            .apply_transpose(p)
            .iter()
            .zip(&lp.c)
            .map(|(&s, &c)| ((s - c) / epsilon).exp())
            .sum();
        (primal - (bp - epsilon * barrier)).max(0.0)
    });
    ResidualReport { primal_inf, toric_inf, dual_gap }
}

fn rowspace_toric_residual(lp: &StandardFormLP, x: &[f64], epsilon: f64) -> f64 {
    let v: Vec<f64> = x
        .iter()
        .zip(&lp.c)
        .map(|(&xi, &ci)| xi.ln() + ci / epsilon)
        .collect();
    match crate::linalg::rowspace_projection(&lp.a, &v) {
        Some(q) => lp
            .apply_transpose(&q)
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        None => f64::INFINITY,
    }
}

/// Exact rational `λ` with `λᵀA = (1,…,1)`, if the ones vector lies in
/// the row space of `A`.
pub fn ones_coefficients(a: &[Vec<i64>]) -> Option<Vec<Rat>> {
    if a.is_empty() {
        return None;
    }
    let d = a.len();
    let n = a[0].len();
    // transpose: n equations in d unknowns
    let at: Vec<Vec<Rat>> = (0..n)
        .map(|j| (0..d).map(|i| exact::rat_i64(a[i][j])).collect())
        .collect();
    let ones = vec![exact::rat_i64(1); n];
    exact::solve_rational(&at, &ones)
}
