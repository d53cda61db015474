//! Brute-force verifiers.
//!
//! `lp_optimum` enumerates all basic solutions in exact rational
//! arithmetic; `mirror_solve` is a full-gradient dual ascent, deliberately
//! from a different algorithm family than the coordinate methods it
//! cross-checks. Both are desk-scale only.

use num_traits::{Signed, Zero};

use crate::exact::{self, Rat};
use crate::model::{solution_report, EntropicSolution, StandardFormLP};
use crate::{Error, Result};

pub const MAX_ORACLE_COLUMNS: usize = 20;

/// A basic feasible solution, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub support: Vec<usize>,
    pub x: Vec<Rat>,
    pub cost: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexList {
    pub vertices: Vec<Vertex>,
    pub optimal_index: Option<usize>,
    /// True when exactly one vertex attains the minimum cost.
    pub unique: bool,
}

/// Exact LP optimum by vertex enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOptimum {
    pub x: Vec<f64>,
    pub cost: f64,
    pub unique: bool,
    pub support: Vec<usize>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        // advance to the next k-subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Enumerate every basic feasible solution of `lp`, exactly.
pub fn enumerate_vertices(lp: &StandardFormLP) -> Result<VertexList> {
    let d = lp.num_rows();
    let n = lp.num_cols();
    if n > MAX_ORACLE_COLUMNS {
        return Err(Error::TooLarge(format!(
            "vertex enumeration is capped at {MAX_ORACLE_COLUMNS} columns, got {n}"
        )));
    }
    let b: Vec<Rat> = lp
        .b
        .iter()
        .map(|&v| exact::rat_f64(v).ok_or(Error::InvalidProblem("non-finite b".into())))
        .collect::<Result<_>>()?;
    let c: Vec<Rat> = lp
        .c
        .iter()
        .map(|&v| exact::rat_f64(v).ok_or(Error::InvalidProblem("non-finite c".into())))
        .collect::<Result<_>>()?;

    let mut vertices: Vec<Vertex> = Vec::new();
    for subset in combinations(n, d.min(n)) {
        // square system in the chosen columns; a singular-but-consistent
        // system still yields a basic solution (free variables at zero)
        let a_s: Vec<Vec<Rat>> = lp
            .a
            .iter()
            .map(|row| subset.iter().map(|&j| exact::rat_i64(row[j])).collect())
            .collect();
        let Some(x_s) = exact::solve_rational(&a_s, &b) else {
            continue;
        };
        if x_s.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut x = vec![Rat::zero(); n];
        for (&j, v) in subset.iter().zip(x_s) {
            x[j] = v;
        }
        if vertices.iter().any(|v| v.x == x) {
            continue;
        }
        let cost: Rat = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        let support: Vec<usize> = (0..n).filter(|&j| !x[j].is_zero()).collect();
        vertices.push(Vertex { support, x, cost });
    }
    if vertices.is_empty() {
        return Ok(VertexList { vertices, optimal_index: None, unique: false });
    }
    let optimal_index = (0..vertices.len())
        .min_by(|&i, &j| vertices[i].cost.cmp(&vertices[j].cost))
        .unwrap();
    let best = vertices[optimal_index].cost.clone();
    let ties = vertices.iter().filter(|v| v.cost == best).count();
    Ok(VertexList { vertices, optimal_index: Some(optimal_index), unique: ties == 1 })
}

/// Exact optimum of the LP, or an infeasibility error.
pub fn lp_optimum(lp: &StandardFormLP) -> Result<LpOptimum> {
    let list = enumerate_vertices(lp)?;
    let Some(idx) = list.optimal_index else {
        return Err(Error::Infeasible("no basic feasible solution".into()));
    };
    let vertex = &list.vertices[idx];
    Ok(LpOptimum {
        x: vertex.x.iter().map(exact::rat_to_f64).collect(),
        cost: exact::rat_to_f64(&vertex.cost),
        unique: list.unique,
        support: vertex.support.clone(),
    })
}

/// Exact feasibility of `{x ≥ 0 : Ax = y}` via basic-solution enumeration.
pub fn is_feasible(a: &[Vec<i64>], y: &[f64]) -> Result<bool> {
    let n = a.first().map_or(0, |r| r.len());
    let lp = StandardFormLP::new(a.to_vec(), y.to_vec(), vec![0.0; n])?;
    if lp.b.iter().all(|&v| v == 0.0) {
        return Ok(true);
    }
    Ok(enumerate_vertices(&lp)?.optimal_index.is_some())
}

fn primal_from_potentials(lp: &StandardFormLP, p: &[f64], epsilon: f64) -> Vec<f64> {
    lp.apply_transpose(p)
        .iter()
        .zip(&lp.c)
        .map(|(&s, &c)| ((s - c) / epsilon).exp())
        .collect()
}

/// Full-gradient ascent on the entropic dual with backtracking line
/// search. Slow but provably monotone; used only as an oracle.
pub fn mirror_solve(
    lp: &StandardFormLP,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    let d = lp.num_rows();
    let col_norm = (0..lp.num_cols())
        .map(|j| lp.a.iter().map(|row| row[j].abs() as f64).sum::<f64>())
        .fold(0.0, f64::max);
    let eta0 = epsilon / (col_norm * col_norm).max(1.0);
    let mut p = vec![0.0; d];
    let mut eta = eta0;
    let mut x = primal_from_potentials(lp, &p, epsilon);
    // the objective b·p − ε·Σ exp((Aᵀp−c)/ε) is b·p − ε·Σx at a cached x
    let objective = |p: &[f64], x: &[f64]| -> f64 {
        let bp: f64 = lp.b.iter().zip(p).map(|(&b, &pi)| b * pi).sum();
        bp - epsilon * x.iter().sum::<f64>()
    };
    let mut g0 = objective(&p, &x);
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..max_iter {
        iterations = iter;
        let grad: Vec<f64> = lp
            .apply(&x)
            .iter()
            .zip(&lp.b)
            .map(|(ax, b)| b - ax)
            .collect();
        let res = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if res <= tol {
            converged = true;
            break;
        }
        // 1/L bound for the dual Hessian (1/ε)·A·diag(x)·Aᵀ at the
        // current x; a step this small never decreases the objective,
        // even when the increase underflows double precision
        let eta_safe = epsilon / ((col_norm * col_norm) * (x.iter().sum::<f64>() + 1.0));
        eta = (eta * 2.0).min(1e6 * eta0);
        loop {
            if eta <= eta_safe {
                eta = eta_safe;
                for (pi, &g) in p.iter_mut().zip(&grad) {
                    *pi += eta * g;
                }
                x = primal_from_potentials(lp, &p, epsilon);
                g0 = objective(&p, &x);
                break;
            }
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(&pi, &g)| pi + eta * g).collect();
            let trial_x = primal_from_potentials(lp, &trial, epsilon);
            let trial_obj = objective(&trial, &trial_x);
            if trial_obj > g0 {
                p = trial;
                x = trial_x;
                g0 = trial_obj;
                break;
            }
            eta *= 0.5;
        }
    }
    let residuals = solution_report(lp, &x, Some(&p), epsilon);
    Ok(EntropicSolution { x, p, epsilon, iterations, converged, residuals })
}
