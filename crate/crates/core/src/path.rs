//! Tracking the regularization path x*(μ) down to the exact LP optimum.
//!
//! On the scaled toric variety the primal optimum factors through d torus
//! coordinates: x_j(μ) = exp(−c_j/μ)·t^{a_j}. The residual system
//!
//!   R_i(u, μ) = Σ_j a_{ij} exp(−c_j/μ + a_j·u) − b_i,   u = log t,
//!
//! has a symmetric positive definite Jacobian A·diag(x)·Aᵀ on the
//! interior, so a plain Euler predictor / Newton corrector loop suffices
//! at desk scale. As μ → 0 the iterate drifts toward a face of the
//! feasible polytope; the active support is detected numerically and the
//! vertex is recovered by an exact rational solve on that support.

use num_traits::Signed;

use crate::exact::{self, Rat};
use crate::linalg;
use crate::model::StandardFormLP;
use crate::{Error, Result};

pub const DEFAULT_THETA: f64 = 0.8;
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_CORRECTOR_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_NEWTON: usize = 40;
/// Accepted steps with an unchanged support before tracking stops early.
const SUPPORT_STABLE_STEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStatus {
    Converged,
    Stalled,
    AmbiguousTie,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PathSample {
    pub mu: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PathTrace {
    pub samples: Vec<PathSample>,
    pub final_support: Vec<usize>,
    pub final_vertex: Option<Vec<f64>>,
    pub status: PathStatus,
}

/// Outcome of snapping a near-boundary point to a basic feasible solution.
#[derive(Debug, Clone)]
pub enum VertexRounding {
    Vertex { x: Vec<Rat>, support: Vec<usize> },
    Ambiguous { reason: String },
}

/// The primal point parametrized by torus coordinates: x_j = exp(−c_j/μ + a_j·u).
pub fn point_from_torus(lp: &StandardFormLP, u: &[f64], mu: f64) -> Vec<f64> {
    (0..lp.num_cols())
        .map(|j| {
            let aju: f64 = (0..lp.num_rows()).map(|i| lp.a[i][j] as f64 * u[i]).sum();
            (-lp.c[j] / mu + aju).exp()
        })
        .collect()
}

/// Residual of the homotopy system, R = Ax(u,μ) − b.
pub fn path_residual(lp: &StandardFormLP, u: &[f64], mu: f64) -> Vec<f64> {
    let x = point_from_torus(lp, u, mu);
    lp.apply(&x)
        .into_iter()
        .zip(&lp.b)
        .map(|(lhs, &bi)| lhs - bi)
        .collect()
}

/// Jacobian ∂R/∂u = A·diag(x)·Aᵀ at the given torus coordinates.
pub fn path_jacobian(lp: &StandardFormLP, u: &[f64], mu: f64) -> Vec<Vec<f64>> {
    let x = point_from_torus(lp, u, mu);
    jacobian_at(lp, &x)
}

fn jacobian_at(lp: &StandardFormLP, x: &[f64]) -> Vec<Vec<f64>> {
    let d = lp.num_rows();
    let mut jac = vec![vec![0.0; d]; d];
    for j in 0..lp.num_cols() {
        for i in 0..d {
            if lp.a[i][j] == 0 {
                continue;
            }
            for r in 0..d {
                jac[i][r] += lp.a[i][j] as f64 * lp.a[r][j] as f64 * x[j];
            }
        }
    }
    jac
}

/// Recover the torus coordinates t of a point on the scaled variety:
/// solve Aᵀ·log t = log x + c/ε and report the attained residual.
pub fn initial_t(lp: &StandardFormLP, x_eps: &[f64], epsilon: f64) -> Result<(Vec<f64>, f64)> {
    if x_eps.len() != lp.num_cols() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, expected {}",
            x_eps.len(),
            lp.num_cols()
        )));
    }
    for (j, &v) in x_eps.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositiveEntry { index: j, value: v });
        }
    }
    let v: Vec<f64> = x_eps
        .iter()
        .zip(&lp.c)
        .map(|(&xj, &cj)| xj.ln() + cj / epsilon)
        .collect();
    let u = linalg::rowspace_projection(&lp.a, &v)
        .ok_or_else(|| Error::Degenerate("constraint matrix is rank deficient".into()))?;
    let fitted = lp.apply_transpose(&u);
    let residual = fitted
        .iter()
        .zip(&v)
        .map(|(f, w)| (f - w).abs())
        .fold(0.0, f64::max);
    if residual > 1e-6 {
        return Err(Error::InvalidProblem(format!(
            "point is not on the scaled toric variety (log-space residual {residual:.3e})"
        )));
    }
    Ok((u.iter().map(|ui| ui.exp()).collect(), residual))
}

/// Newton correction of t at fixed μ, working in u = log t.
pub fn corrector(
    lp: &StandardFormLP,
    t: &[f64],
    mu: f64,
    tol: f64,
    max_newton: usize,
) -> Result<Vec<f64>> {
    let u: Vec<f64> = t.iter().map(|ti| ti.ln()).collect();
    Ok(corrector_u(lp, &u, mu, tol, max_newton)?
        .iter()
        .map(|ui| ui.exp())
        .collect())
}

/// Newton corrector in log-torus coordinates. `t = exp(u)` overflows once
/// `u` passes ~709 even though `x` stays bounded, so the tracker calls this
/// form and only exponentiates for reporting.
pub fn corrector_u(
    lp: &StandardFormLP,
    u0: &[f64],
    mu: f64,
    tol: f64,
    max_newton: usize,
) -> Result<Vec<f64>> {
    // NaN/inf-aware sup-norm: f64::max would silently drop NaN entries,
    // and a later finite entry must not erase an earlier non-finite one
    let sup = |r: &[f64]| {
        if r.iter().any(|v| !v.is_finite()) {
            f64::INFINITY
        } else {
            r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        }
    };
    let mut u: Vec<f64> = u0.to_vec();
    let mut residual = path_residual(lp, &u, mu);
    let mut norm = sup(&residual);
    for _ in 0..max_newton {
        if norm <= tol {
            return Ok(u);
        }
        let jac = path_jacobian(lp, &u, mu);
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let du = linalg::lu_solve(jac, rhs).ok_or(Error::NoConvergence {
            max_iter: max_newton,
            residual: norm,
        })?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
        residual = path_residual(lp, &u, mu);
        let next = sup(&residual);
        if !next.is_finite() {
            return Err(Error::NoConvergence {
                max_iter: max_newton,
                residual: next,
            });
        }
        norm = next;
    }
    if norm <= tol {
        Ok(u)
    } else {
        Err(Error::NoConvergence {
            max_iter: max_newton,
            residual: norm,
        })
    }
}

fn support_of(x: &[f64], threshold: f64) -> Vec<usize> {
    let max = x.iter().fold(0.0f64, |m, &v| m.max(v));
    x.iter()
        .enumerate()
        .filter(|&(_, &v)| v > threshold * max)
        .map(|(j, _)| j)
        .collect()
}

/// Snap a near-vertex point to an exact basic feasible solution on its
/// numerically active support.
pub fn round_to_vertex(
    lp: &StandardFormLP,
    x: &[f64],
    support_threshold: f64,
) -> Result<VertexRounding> {
    if x.len() != lp.num_cols() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, expected {}",
            x.len(),
            lp.num_cols()
        )));
    }
    let max = x.iter().fold(0.0f64, |m, &v| m.max(v));
    let support: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v >= support_threshold * max)
        .map(|(j, _)| j)
        .collect();
    let d = lp.num_rows();
    if support.len() > d {
        return Ok(VertexRounding::Ambiguous {
            reason: format!("active support has {} > {d} columns", support.len()),
        });
    }
    let sub: Vec<Vec<i64>> = lp
        .a
        .iter()
        .map(|row| support.iter().map(|&j| row[j]).collect())
        .collect();
    let cols: Vec<Vec<i64>> = (0..support.len())
        .map(|k| sub.iter().map(|row| row[k]).collect())
        .collect();
    if exact::rank_i64(&cols) < support.len() {
        return Ok(VertexRounding::Ambiguous {
            reason: "support columns are linearly dependent".into(),
        });
    }
    let a_rat: Vec<Vec<Rat>> = sub
        .iter()
        .map(|row| row.iter().map(|&v| exact::rat_i64(v)).collect())
        .collect();
    let b_rat: Vec<Rat> = lp
        .b
        .iter()
        .map(|&v| exact::rat_f64(v).ok_or_else(|| Error::InvalidProblem("non-finite b".into())))
        .collect::<Result<_>>()?;
    let Some(xs) = exact::solve_rational(&a_rat, &b_rat) else {
        return Ok(VertexRounding::Ambiguous {
            reason: "support system A_S x = b is inconsistent".into(),
        });
    };
    if xs.iter().any(|v| v.is_negative()) {
        return Ok(VertexRounding::Ambiguous {
            reason: "basic solution on the detected support is infeasible".into(),
        });
    }
    let mut full = vec![Rat::from_integer(0.into()); lp.num_cols()];
    for (k, &j) in support.iter().enumerate() {
        full[j] = xs[k].clone();
    }
    Ok(VertexRounding::Vertex { x: full, support })
}

/// Predictor–corrector continuation from a solved x*(ε₀) toward μ → 0.
pub fn track(
    lp: &StandardFormLP,
    x_eps: &[f64],
    epsilon0: f64,
    theta: f64,
    mu_min: f64,
) -> Result<PathTrace> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidProblem("theta must lie in (0,1)".into()));
    }
    if !(mu_min > 0.0 && mu_min < epsilon0) {
        return Err(Error::InvalidProblem("mu_min must lie in (0, epsilon0)".into()));
    }
    let (t0, _) = initial_t(lp, x_eps, epsilon0)?;
    let u0: Vec<f64> = t0.iter().map(|v| v.ln()).collect();
    let mut u = corrector_u(lp, &u0, epsilon0, DEFAULT_CORRECTOR_TOL, DEFAULT_MAX_NEWTON)?;
    let mut mu = epsilon0;
    let mut samples = Vec::new();
    let push = |samples: &mut Vec<PathSample>, lp: &StandardFormLP, u: &[f64], mu: f64| {
        let x = point_from_torus(lp, u, mu);
        let cost = lp.cost_of(&x);
        samples.push(PathSample {
            mu,
            t: u.iter().map(|v| v.exp()).collect(),
            x,
            cost,
        });
    };
    push(&mut samples, lp, &u, mu);
    let mut support = support_of(&samples[0].x, DEFAULT_SUPPORT_THRESHOLD);
    let mut stable = 0usize;
    let mut stalled = false;
    while mu > mu_min {
        let mut local_theta = theta;
        let mut rejected = 0usize;
        loop {
            let mu_next = (local_theta * mu).max(mu_min);
            // Euler predictor from J du/dμ = −A diag(x) c/μ²
            let x = point_from_torus(lp, &u, mu);
            let jac = jacobian_at(lp, &x);
            let mut rhs = vec![0.0; lp.num_rows()];
            for j in 0..lp.num_cols() {
                let w = x[j] * lp.c[j] / (mu * mu);
                for i in 0..lp.num_rows() {
                    rhs[i] -= lp.a[i][j] as f64 * w;
                }
            }
            let du_dmu = linalg::lu_solve(jac, rhs).unwrap_or_else(|| vec![0.0; lp.num_rows()]);
            let predicted: Vec<f64> = u
                .iter()
                .zip(&du_dmu)
                .map(|(ui, di)| ui + di * (mu_next - mu))
                .collect();
            match corrector_u(lp, &predicted, mu_next, DEFAULT_CORRECTOR_TOL, DEFAULT_MAX_NEWTON) {
                Ok(corrected) => {
                    u = corrected;
                    mu = mu_next;
                    push(&mut samples, lp, &u, mu);
                    break;
                }
                Err(_) => {
                    // halve the step in log μ
                    local_theta = local_theta.sqrt();
                    rejected += 1;
                    if rejected >= 30 || local_theta > 0.9999 {
                        stalled = true;
                        break;
                    }
                }
            }
        }
        if stalled {
            break;
        }
        let current = support_of(&samples.last().unwrap().x, DEFAULT_SUPPORT_THRESHOLD);
        if current == support {
            stable += 1;
        } else {
            support = current;
            stable = 0;
        }
        if stable >= SUPPORT_STABLE_STEPS && support.len() <= lp.num_rows() {
            break;
        }
    }
    let last = samples.last().expect("at least the initial sample");
    let final_support = support_of(&last.x, DEFAULT_SUPPORT_THRESHOLD);
    // a stall right at a degenerate vertex is still a success: the
    // Jacobian goes singular there, but the support has already locked in
    let (final_vertex, status) = match round_to_vertex(lp, &last.x, DEFAULT_SUPPORT_THRESHOLD)? {
        VertexRounding::Vertex { x, .. } => (
            Some(x.iter().map(exact::rat_to_f64).collect()),
            PathStatus::Converged,
        ),
        VertexRounding::Ambiguous { .. } if stalled => (None, PathStatus::Stalled),
        VertexRounding::Ambiguous { .. } => (None, PathStatus::AmbiguousTie),
    };
    Ok(PathTrace {
        samples,
        final_support,
        final_vertex,
        status,
    })
}
