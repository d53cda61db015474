//! Log-domain Sinkhorn solver for balanced optimal transport.
//!
//! Alternates the closed-form dual coordinate updates
//! `f_κ = −ε·log Σ_λ exp((g_λ − c_{κλ})/ε) + ε·log μ_κ` (and symmetrically
//! for `g`), which is matrix scaling `x = diag(F)·K·diag(G)` written in
//! potentials. All sums go through max-shifted log-sum-exp so small `ε`
//! cannot underflow the kernel.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::builders::{build_transport, TransportProblem};
use crate::linalg::log_sum_exp;
use crate::model::{solution_report, EntropicSolution};
use crate::Result;

/// Row and column potentials of the scaling iteration.
#[derive(Debug, Clone)]
pub struct SinkhornState {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub epsilon: f64,
    pub iteration: usize,
}

impl SinkhornState {
    pub fn new(d1: usize, d2: usize, epsilon: f64) -> Self {
        SinkhornState { f: vec![0.0; d1], g: vec![0.0; d2], epsilon, iteration: 0 }
    }

    /// The implied primal coupling `x_{κλ} = exp((f_κ + g_λ − c_{κλ})/ε)`.
    pub fn coupling(&self, tp: &TransportProblem) -> Vec<Vec<f64>> {
        self.f
            .iter()
            .enumerate()
            .map(|(k, &fk)| {
                self.g
                    .iter()
                    .zip(&tp.cost[k])
                    .map(|(&gl, &c)| ((fk + gl - c) / self.epsilon).exp())
                    .collect()
            })
            .collect()
    }

    /// The matrix-scaling factors `(F, K, G)` with `F = exp(f/ε)` etc.
    /// Only meaningful when `exp(−c/ε)` does not underflow.
    pub fn matrix_form(&self, tp: &TransportProblem) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let eps = self.epsilon;
        let f: Vec<f64> = self.f.iter().map(|&v| (v / eps).exp()).collect();
        let g: Vec<f64> = self.g.iter().map(|&v| (v / eps).exp()).collect();
        let k: Vec<Vec<f64>> = tp
            .cost
            .iter()
            .map(|row| row.iter().map(|&c| (-c / eps).exp()).collect())
            .collect();
        (f, k, g)
    }
}

/// Update a single row potential from the current column potentials.
pub fn update_row(state: &mut SinkhornState, tp: &TransportProblem, kappa: usize) {
    let eps = state.epsilon;
    let terms: Vec<f64> = state
        .g
        .iter()
        .zip(&tp.cost[kappa])
        .map(|(&gl, &c)| (gl - c) / eps)
        .collect();
    state.f[kappa] = -eps * log_sum_exp(&terms) + eps * tp.mu[kappa].ln();
}

/// Update a single column potential from the current row potentials.
pub fn update_col(state: &mut SinkhornState, tp: &TransportProblem, lambda: usize) {
    let eps = state.epsilon;
    let terms: Vec<f64> = state
        .f
        .iter()
        .enumerate()
        .map(|(k, &fk)| (fk - tp.cost[k][lambda]) / eps)
        .collect();
    state.g[lambda] = -eps * log_sum_exp(&terms) + eps * tp.nu[lambda].ln();
}

/// One full sweep: all row potentials, then all column potentials.
pub fn sweep(state: &mut SinkhornState, tp: &TransportProblem) {
    for kappa in 0..tp.mu.len() {
        update_row(state, tp, kappa);
    }
    for lambda in 0..tp.nu.len() {
        update_col(state, tp, lambda);
    }
    state.iteration += 1;
}

/// Max marginal gap of the implied coupling, in the ∞-norm.
pub fn marginal_residual(state: &SinkhornState, tp: &TransportProblem) -> f64 {
    let x = state.coupling(tp);
    let mut res: f64 = 0.0;
    for (row, &m) in x.iter().zip(&tp.mu) {
        res = res.max((row.iter().sum::<f64>() - m).abs());
    }
    for (lambda, &n) in tp.nu.iter().enumerate() {
        let col: f64 = x.iter().map(|row| row[lambda]).sum();
        res = res.max((col - n).abs());
    }
    res
}

/// Solve balanced entropic OT; deterministic ascending sweep order.
pub fn sinkhorn_solve(
    tp: &TransportProblem,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    sinkhorn_solve_seeded(tp, epsilon, tol, max_iter, None)
}

/// Like [`sinkhorn_solve`] but with an optional seed that randomizes the
/// coordinate update order each sweep.
pub fn sinkhorn_solve_seeded(
    tp: &TransportProblem,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
    seed: Option<u64>,
) -> Result<EntropicSolution> {
    let lp = build_transport(tp)?;
    let d1 = tp.mu.len();
    let d2 = tp.nu.len();
    let mut state = SinkhornState::new(d1, d2, epsilon);
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut converged = false;
    while state.iteration < max_iter {
        match rng.as_mut() {
            None => sweep(&mut state, tp),
            Some(rng) => {
                let mut rows: Vec<usize> = (0..d1).collect();
                let mut cols: Vec<usize> = (0..d2).collect();
                rows.shuffle(rng);
                cols.shuffle(rng);
                for &kappa in &rows {
                    update_row(&mut state, tp, kappa);
                }
                for &lambda in &cols {
                    update_col(&mut state, tp, lambda);
                }
                state.iteration += 1;
            }
        }
        if marginal_residual(&state, tp) <= tol {
            converged = true;
            break;
        }
    }
    let x: Vec<f64> = state.coupling(tp).into_iter().flatten().collect();
    // translate (f, g) into potentials for the reduced matrix with the
    // last column-sum row deleted: p = (f + g_{d2}, g_1 − g_{d2}, …)
    let g_last = state.g[d2 - 1];
    let mut p: Vec<f64> = state.f.iter().map(|&fk| fk + g_last).collect();
    p.extend(state.g[..d2 - 1].iter().map(|&gl| gl - g_last));
    let residuals = solution_report(&lp, &x, Some(&p), epsilon);
    Ok(EntropicSolution {
        x,
        p,
        epsilon,
        iterations: state.iteration,
        converged,
        residuals,
    })
}
