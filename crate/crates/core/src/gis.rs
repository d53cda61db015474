//! Generalized iterative scaling (Darroch–Ratcliff) for LPs whose row
//! space contains the ones vector.
//!
//! The problem is first rewritten so that every column of the constraint
//! matrix has the same sum `a`: append the slack row `a − |a_j|`, prepend
//! the column `(0,…,0,a)`, and rescale the right-hand side onto the
//! probability simplex. The multiplicative iteration
//! `y_i ← y_i (β^{a_i}/(𝒜y)^{a_i})^{1/a}` then converges to the unique
//! positive point of the scaled toric variety on `{𝒜y = β}`; the original
//! solution is recovered as `x_i = y_i/y_0`.

use crate::exact::{rat_f64, rat_to_f64};
use crate::linalg;
use crate::model::{ones_coefficients, solution_report, EntropicSolution, StandardFormLP};
use crate::{Error, Result};

/// The constant-column-sum reformulation of a standard-form LP.
#[derive(Debug, Clone)]
pub struct AugmentedLP {
    /// `(d+1) × (n+1)` matrix; every column sums to `a`.
    pub cal_a: Vec<Vec<i64>>,
    /// Rescaled right-hand side; sums to `a`.
    pub beta: Vec<f64>,
    /// Shifted cost vector, `γ_0 = ε log s_c`, `γ_i = c_i + ε log s_c`.
    pub gamma: Vec<f64>,
    /// Common column sum.
    pub a: i64,
    /// Fixed coordinate total `s = λ·b` of the original feasible set.
    pub s: f64,
    /// `s_c = 1 + Σ exp(−c_i/ε)`.
    pub s_c: f64,
    /// The problem this augmentation came from.
    pub original: StandardFormLP,
}

/// Build the GIS augmentation. Errors when the ones vector is not in the
/// row space of `A` (for conic problems, build with the normalization
/// row).
pub fn gis_augment(lp: &StandardFormLP, epsilon: f64) -> Result<AugmentedLP> {
    let Some(lambda) = ones_coefficients(&lp.a) else {
        return Err(Error::OnesNotInRowSpace());
    };
    let d = lp.num_rows();
    let n = lp.num_cols();
    // s = λ·b exactly; b entries are dyadic rationals
    let s = {
        let mut acc = crate::exact::rat_i64(0);
        for (li, &bi) in lambda.iter().zip(&lp.b) {
            let b_rat = rat_f64(bi).ok_or(Error::InvalidProblem("non-finite b".into()))?;
            acc += li * b_rat;
        }
        rat_to_f64(&acc)
    };
    let col_sums: Vec<i64> = (0..n).map(|j| lp.a.iter().map(|row| row[j]).sum()).collect();
    let a = *col_sums.iter().max().expect("n >= 1");
    let mut cal_a: Vec<Vec<i64>> = Vec::with_capacity(d + 1);
    for row in &lp.a {
        let mut extended = Vec::with_capacity(n + 1);
        extended.push(0);
        extended.extend_from_slice(row);
        cal_a.push(extended);
    }
    let mut slack_row = Vec::with_capacity(n + 1);
    slack_row.push(a);
    slack_row.extend(col_sums.iter().map(|&cs| a - cs));
    cal_a.push(slack_row);

    let b_total: f64 = lp.b.iter().sum();
    let mut beta: Vec<f64> = lp.b.iter().map(|&bi| bi / (s + 1.0)).collect();
    beta.push(a as f64 - b_total / (s + 1.0));

    let s_c = 1.0 + lp.c.iter().map(|&ci| (-ci / epsilon).exp()).sum::<f64>();
    let shift = epsilon * s_c.ln();
    let mut gamma = Vec::with_capacity(n + 1);
    gamma.push(shift);
    gamma.extend(lp.c.iter().map(|&ci| ci + shift));

    Ok(AugmentedLP { cal_a, beta, gamma, a, s, s_c, original: lp.clone() })
}

impl AugmentedLP {
    /// The augmented system as a standard-form LP (for residual checks).
    pub fn as_lp(&self) -> StandardFormLP {
        StandardFormLP {
            a: self.cal_a.clone(),
            b: self.beta.clone(),
            c: self.gamma.clone(),
            labels: None,
        }
    }
}

/// Iteration state: log-domain `y` with support freezing for zero rows
/// of `β`.
#[derive(Debug, Clone)]
pub struct GisState {
    /// `log y_i`; frozen entries are `NEG_INFINITY`.
    pub log_y: Vec<f64>,
    pub iteration: usize,
}

impl GisState {
    pub fn start(aug: &AugmentedLP, epsilon: f64) -> Self {
        let mut log_y: Vec<f64> = aug.gamma.iter().map(|&g| -g / epsilon).collect();
        // rows with β_r = 0 force every column they touch to zero
        for (row, &beta_r) in aug.cal_a.iter().zip(&aug.beta) {
            if beta_r == 0.0 {
                for (i, &entry) in row.iter().enumerate() {
                    if entry > 0 {
                        log_y[i] = f64::NEG_INFINITY;
                    }
                }
            }
        }
        GisState { log_y, iteration: 0 }
    }

    pub fn y(&self) -> Vec<f64> {
        self.log_y.iter().map(|&l| l.exp()).collect()
    }

    /// `‖𝒜y − β‖_∞`.
    pub fn residual(&self, aug: &AugmentedLP) -> f64 {
        let y = self.y();
        aug.cal_a
            .iter()
            .zip(&aug.beta)
            .map(|(row, &beta_r)| {
                let dot: f64 = row.iter().zip(&y).map(|(&a, &v)| a as f64 * v).sum();
                (dot - beta_r).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One multiplicative update, additively in log space:
    /// `log y += (1/a)·𝒜ᵀ(log β − log 𝒜y)`.
    pub fn step(&mut self, aug: &AugmentedLP) -> Result<()> {
        let y = self.y();
        let mut log_ratio = Vec::with_capacity(aug.cal_a.len());
        for (row, &beta_r) in aug.cal_a.iter().zip(&aug.beta) {
            if beta_r == 0.0 {
                log_ratio.push(0.0); // columns in this row are frozen
                continue;
            }
            let dot: f64 = row.iter().zip(&y).map(|(&a, &v)| a as f64 * v).sum();
            if dot <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "(𝒜y)_r = 0 with β_r = {beta_r} > 0: no support left for this row"
                )));
            }
            log_ratio.push(beta_r.ln() - dot.ln());
        }
        let inv_a = 1.0 / aug.a as f64;
        for (i, log_yi) in self.log_y.iter_mut().enumerate() {
            if log_yi.is_finite() {
                let update: f64 = aug
                    .cal_a
                    .iter()
                    .zip(&log_ratio)
                    .map(|(row, &lr)| row[i] as f64 * lr)
                    .sum();
                *log_yi += inv_a * update;
            }
        }
        // the raw multiplicative update only sub-normalizes (AM–GM gives
        // Σy′ ≤ 1 with equality at the fixed point); project back onto the
        // simplex, which is legal on T_𝒜 because ones ∈ rowspace(𝒜)
        let log_sum = linalg::log_sum_exp(&self.log_y);
        for log_yi in &mut self.log_y {
            *log_yi -= log_sum;
        }
        self.iteration += 1;
        Ok(())
    }
}

/// Run GIS to tolerance `tol` on `‖𝒜y − β‖_∞`, then de-augment.
pub fn gis_solve(
    aug: &AugmentedLP,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    let mut state = GisState::start(aug, epsilon);
    let mut converged = false;
    while state.iteration < max_iter {
        state.step(aug)?;
        if state.residual(aug) <= tol {
            converged = true;
            break;
        }
    }
    let y = state.y();
    let y0 = y[0];
    if y0 <= 0.0 {
        return Err(Error::Degenerate("dilation coordinate y_0 vanished".into()));
    }
    let x: Vec<f64> = y[1..].iter().map(|&v| v / y0).collect();
    let lp = &aug.original;
    // recover dual potentials from log x + c/ε ∈ rowspace(A)
    let v: Vec<f64> = x
        .iter()
        .zip(&lp.c)
        .map(|(&xi, &ci)| if xi > 0.0 { xi.ln() + ci / epsilon } else { 0.0 })
        .collect();
    let p = crate::linalg::rowspace_projection(&lp.a, &v)
        .map(|q| q.iter().map(|&qi| qi * epsilon).collect())
        .unwrap_or_else(|| vec![0.0; lp.num_rows()]);
    let residuals = solution_report(lp, &x, Some(&p), epsilon);
    Ok(EntropicSolution { x, p, epsilon, iterations: state.iteration, converged, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_transport, TransportProblem};
    use crate::sinkhorn::sinkhorn_solve;
    use rand::Rng;
    use rand::SeedableRng;

    fn example_1_1_lp() -> StandardFormLP {
        let tp = TransportProblem::new(
            vec![7.0, 8.0],
            vec![4.0, 5.0, 6.0],
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 2.0, 5.0]],
        )
        .unwrap();
        build_transport(&tp).unwrap()
    }

    #[test]
    fn augmentation_of_the_reference_instance() {
        let aug = gis_augment(&example_1_1_lp(), 1.0).unwrap();
        assert_eq!(aug.a, 2);
        assert_eq!(aug.s, 15.0);
        // appended slack row over the original columns
        assert_eq!(&aug.cal_a[4][1..], &[0, 0, 1, 0, 0, 1]);
        // prepended dilation column
        let col0: Vec<i64> = aug.cal_a.iter().map(|row| row[0]).collect();
        assert_eq!(col0, vec![0, 0, 0, 0, 2]);
        let expected_beta: Vec<f64> = [7.0, 8.0, 4.0, 5.0, 8.0].iter().map(|v| v / 16.0).collect();
        for (got, exp) in aug.beta.iter().zip(&expected_beta) {
            assert!((got - exp).abs() < 1e-15);
        }
        let beta_sum: f64 = aug.beta.iter().sum();
        assert!((beta_sum - aug.a as f64).abs() < 1e-12);
    }

    #[test]
    fn equal_column_sums_give_zero_slack_row() {
        let lp = StandardFormLP::new(
            vec![vec![1, 0], vec![0, 1]],
            vec![1.0, 2.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let aug = gis_augment(&lp, 1.0).unwrap();
        assert_eq!(&aug.cal_a[2][1..], &[0, 0]);
    }

    #[test]
    fn augment_rejects_missing_ones_vector() {
        // a single row (1, 2) cannot combine to (1, 1)
        let lp = StandardFormLP::new(vec![vec![1, 2]], vec![3.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(gis_augment(&lp, 1.0), Err(Error::OnesNotInRowSpace())));
    }

    #[test]
    fn beta_is_a_scaled_probability_vector_on_random_transport() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let d1 = rng.gen_range(2..5);
            let d2 = rng.gen_range(2..5);
            let mu: Vec<f64> = (0..d1).map(|_| rng.gen_range(1..9) as f64).collect();
            let total: f64 = mu.iter().sum();
            let mut nu: Vec<f64> = (0..d2).map(|_| rng.gen_range(0.5..1.5)).collect();
            let scale = total / nu.iter().sum::<f64>();
            nu.iter_mut().for_each(|v| *v *= scale);
            let tp = TransportProblem::new(mu, nu, vec![vec![0.0; d2]; d1]).unwrap();
            let aug = gis_augment(&build_transport(&tp).unwrap(), 1.0).unwrap();
            assert!(aug.beta.iter().all(|&v| v >= 0.0));
            let sum: f64 = aug.beta.iter().sum();
            assert!((sum - aug.a as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_cost_converges_to_birch_point() {
        let mut lp = example_1_1_lp();
        lp.c = vec![0.0; 6];
        let aug = gis_augment(&lp, 1.0).unwrap();
        let sol = gis_solve(&aug, 1.0, 1e-12, 1_000_000).unwrap();
        assert!(sol.converged);
        let expected = [28.0, 35.0, 42.0, 32.0, 40.0, 48.0];
        for (got, e) in sol.x.iter().zip(expected) {
            assert!((got - e / 15.0).abs() < 1e-8, "{got} vs {}", e / 15.0);
        }
    }

    #[test]
    fn exact_solution_is_a_fixed_point() {
        // ι(Birch point) solves 𝒜y = β for the zero-cost instance
        let mut lp = example_1_1_lp();
        lp.c = vec![0.0; 6];
        let aug = gis_augment(&lp, 1.0).unwrap();
        let x: [f64; 6] = [28.0, 35.0, 42.0, 32.0, 40.0, 48.0].map(|v| v / 15.0);
        let mut state = GisState::start(&aug, 1.0);
        state.log_y[0] = (1.0f64 / 16.0).ln();
        for (slot, &xi) in state.log_y[1..].iter_mut().zip(&x) {
            *slot = (xi / 16.0).ln();
        }
        assert!(state.residual(&aug) < 1e-12);
        let before = state.log_y.clone();
        state.step(&aug).unwrap();
        for (b, a) in before.iter().zip(&state.log_y) {
            assert!((b - a).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_sinkhorn_on_the_reference_instance() {
        let tp = TransportProblem::new(
            vec![7.0, 8.0],
            vec![4.0, 5.0, 6.0],
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 2.0, 5.0]],
        )
        .unwrap();
        let aug = gis_augment(&build_transport(&tp).unwrap(), 1.0).unwrap();
        let gis = gis_solve(&aug, 1.0, 1e-11, 1_000_000).unwrap();
        let sinkhorn = sinkhorn_solve(&tp, 1.0, 1e-11, 50_000).unwrap();
        assert!(gis.converged);
        for (g, s) in gis.x.iter().zip(&sinkhorn.x) {
            assert!((g - s).abs() < 1e-6, "{g} vs {s}");
        }
    }

    #[test]
    fn iterates_sum_to_one_and_stay_on_the_variety() {
        let lp = example_1_1_lp();
        let aug = gis_augment(&lp, 1.0).unwrap();
        let aug_lp = aug.as_lp();
        let mut state = GisState::start(&aug, 1.0);
        for k in 0..200 {
            state.step(&aug).unwrap();
            let y = state.y();
            let total: f64 = y.iter().sum();
            assert!((total - 1.0).abs() < 1e-10, "iteration {k}: Σy = {total}");
            // γ is non-integer, so the report falls back to the
            // row-space least-squares residual
            let report = solution_report(&aug_lp, &y, None, 1.0);
            assert!(report.toric_inf < 1e-8, "iteration {k}: {}", report.toric_inf);
        }
    }

    #[test]
    fn commuting_diagram_with_the_primal_embedding() {
        let tp = TransportProblem::new(
            vec![7.0, 8.0],
            vec![4.0, 5.0, 6.0],
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 2.0, 5.0]],
        )
        .unwrap();
        let lp = build_transport(&tp).unwrap();
        let aug = gis_augment(&lp, 1.0).unwrap();
        let mut state = GisState::start(&aug, 1.0);
        while state.residual(&aug) > 1e-12 && state.iteration < 1_000_000 {
            state.step(&aug).unwrap();
        }
        let y = state.y();
        let x = sinkhorn_solve(&tp, 1.0, 1e-12, 50_000).unwrap().x;
        let total: f64 = x.iter().sum();
        // ι(x) = (1, x)/(|x|+1)
        let iota: Vec<f64> = std::iter::once(1.0)
            .chain(x.iter().copied())
            .map(|v| v / (total + 1.0))
            .collect();
        for (yi, ii) in y.iter().zip(&iota) {
            assert!((yi - ii).abs() < 1e-8, "{yi} vs {ii}");
        }
    }

    #[test]
    fn zero_beta_rows_freeze_their_columns() {
        let lp = StandardFormLP::new(
            vec![vec![1, 1, 0], vec![0, 0, 1]],
            vec![1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        )
        .unwrap();
        let aug = gis_augment(&lp, 1.0).unwrap();
        assert_eq!(aug.beta[1], 0.0);
        let sol = gis_solve(&aug, 1.0, 1e-12, 100_000).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.x[2], 0.0);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-10);
    }
}
