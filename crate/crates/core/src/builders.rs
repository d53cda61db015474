//! Builders for classical and conic-coupling (unbalanced) optimal transport.
//!
//! Column order is lexicographic everywhere: `(κ,λ)` for transport and
//! `(κ,i,λ,j)` for conic coupling. This ordering is a frozen wire contract
//! shared with the JSON schema.

use serde::{Deserialize, Serialize};

use crate::model::StandardFormLP;
use crate::{Error, Result};

/// Balanced optimal transport data: margins `μ`, `ν` and a cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportProblem {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    /// `d₁ × d₂` cost matrix, row `κ`, column `λ`.
    pub cost: Vec<Vec<f64>>,
}

impl TransportProblem {
    pub fn new(mu: Vec<f64>, nu: Vec<f64>, cost: Vec<Vec<f64>>) -> Result<Self> {
        let tp = TransportProblem { mu, nu, cost };
        tp.check()?;
        Ok(tp)
    }

    fn check(&self) -> Result<()> {
        let d1 = self.mu.len();
        let d2 = self.nu.len();
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidProblem("empty margin".into()));
        }
        if self.mu.iter().chain(&self.nu).any(|&v| v <= 0.0) {
            return Err(Error::InvalidProblem("margins must be positive".into()));
        }
        if self.cost.len() != d1 || self.cost.iter().any(|row| row.len() != d2) {
            return Err(Error::DimensionMismatch(format!(
                "cost must be {d1}×{d2}"
            )));
        }
        let sm: f64 = self.mu.iter().sum();
        let sn: f64 = self.nu.iter().sum();
        if (sm - sn).abs() > 1e-9 * sm.max(sn) {
            return Err(Error::Unbalanced(sm, sn));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.mu.iter().sum()
    }
}

/// Conic coupling data for unbalanced transport: integer margins with
/// `μ_κ ∈ [e₁]`, `ν_λ ∈ [e₂]`, and a cost tensor indexed `(κ,i,λ,j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub d1: usize,
    pub e1: usize,
    pub d2: usize,
    pub e2: usize,
    pub mu: Vec<i64>,
    pub nu: Vec<i64>,
    /// Flattened cost tensor in lexicographic `(κ,i,λ,j)` order; length
    /// `d₁·e₁·d₂·e₂`.
    pub cost: Vec<f64>,
    /// Add the normalization row `Σ x = 1`.
    pub normalized: bool,
}

impl ConicProblem {
    pub fn new(
        d1: usize,
        e1: usize,
        d2: usize,
        e2: usize,
        mu: Vec<i64>,
        nu: Vec<i64>,
        cost: Vec<f64>,
        normalized: bool,
    ) -> Result<Self> {
        if d1 < 2 || e1 < 2 || d2 < 2 || e2 < 2 {
            return Err(Error::InvalidProblem(
                "conic parameters d1, e1, d2, e2 must all be at least 2".into(),
            ));
        }
        if mu.len() != d1 || nu.len() != d2 {
            return Err(Error::DimensionMismatch("margin lengths".into()));
        }
        if mu.iter().any(|&v| v < 1 || v > e1 as i64) {
            return Err(Error::InvalidProblem(format!("mu entries must lie in 1..={e1}")));
        }
        if nu.iter().any(|&v| v < 1 || v > e2 as i64) {
            return Err(Error::InvalidProblem(format!("nu entries must lie in 1..={e2}")));
        }
        let n = d1 * e1 * d2 * e2;
        if cost.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "cost tensor must have {n} entries"
            )));
        }
        Ok(ConicProblem { d1, e1, d2, e2, mu, nu, cost, normalized })
    }

    pub fn num_cols(&self) -> usize {
        self.d1 * self.e1 * self.d2 * self.e2
    }
}

fn transport_label(kappa: usize, lambda: usize) -> String {
    format!("x_{}_{}", kappa + 1, lambda + 1)
}

/// Standard form of balanced transport: row-sum rows for each `κ`, then
/// column-sum rows for `λ = 1..d₂−1` (the last one is deleted so the rows
/// stay independent).
pub fn build_transport(tp: &TransportProblem) -> Result<StandardFormLP> {
    tp.check()?;
    let d1 = tp.mu.len();
    let d2 = tp.nu.len();
    let n = d1 * d2;
    let d = d1 + d2 - 1;
    let mut a = vec![vec![0i64; n]; d];
    let mut labels = Vec::with_capacity(n);
    for kappa in 0..d1 {
        for lambda in 0..d2 {
            let j = kappa * d2 + lambda;
            a[kappa][j] = 1;
            if lambda + 1 < d2 {
                a[d1 + lambda][j] = 1;
            }
            labels.push(transport_label(kappa, lambda));
        }
    }
    let mut b = tp.mu.clone();
    b.extend_from_slice(&tp.nu[..d2 - 1]);
    let c: Vec<f64> = tp.cost.iter().flatten().copied().collect();
    let mut lp = StandardFormLP::new(a, b, c)?;
    lp.labels = Some(labels);
    Ok(lp)
}

/// Standard form of conic coupling: column `(κ,i,λ,j)` is `i·e_κ ⊕ j·e_λ`
/// in `ℕ^{d₁+d₂}`. When `normalized`, an all-ones row with `b`-entry 1 is
/// appended.
pub fn build_conic(cp: &ConicProblem) -> Result<StandardFormLP> {
    let ConicProblem { d1, e1, d2, e2, .. } = *cp;
    let n = cp.num_cols();
    let d = d1 + d2 + usize::from(cp.normalized);
    let mut a = vec![vec![0i64; n]; d];
    let mut labels = Vec::with_capacity(n);
    let mut col = 0;
    for kappa in 0..d1 {
        for i in 1..=e1 {
            for lambda in 0..d2 {
                for j in 1..=e2 {
                    a[kappa][col] = i as i64;
                    a[d1 + lambda][col] = j as i64;
                    if cp.normalized {
                        a[d1 + d2][col] = 1;
                    }
                    labels.push(format!("x_{}{}{}{}", kappa + 1, i, lambda + 1, j));
                    col += 1;
                }
            }
        }
    }
    let mut b: Vec<f64> = cp.mu.iter().map(|&v| v as f64).collect();
    b.extend(cp.nu.iter().map(|&v| v as f64));
    if cp.normalized {
        b.push(1.0);
    }
    let mut lp = StandardFormLP::new(a, b, cp.cost.clone())?;
    lp.labels = Some(labels);
    Ok(lp)
}

/// Closed-form conic coupling witness: mass concentrated at
/// `i = ‖μ‖₁`, `j = ‖ν‖₁`. Requires those totals to stay within the
/// mass alphabets; the instance may be feasible even when this
/// particular construction is not.
pub fn conic_feasible_point(cp: &ConicProblem) -> Result<Vec<f64>> {
    let smu: i64 = cp.mu.iter().sum();
    let snu: i64 = cp.nu.iter().sum();
    if smu > cp.e1 as i64 || snu > cp.e2 as i64 {
        return Err(Error::Infeasible(format!(
            "witness needs |mu| = {smu} <= e1 = {} and |nu| = {snu} <= e2 = {}; \
             the problem itself may still be feasible (check cone membership)",
            cp.e1, cp.e2
        )));
    }
    let mu_bar: Vec<f64> = cp.mu.iter().map(|&v| v as f64 / smu as f64).collect();
    let nu_bar: Vec<f64> = cp.nu.iter().map(|&v| v as f64 / snu as f64).collect();
    let mut x = vec![0.0; cp.num_cols()];
    let mut col = 0;
    for kappa in 0..cp.d1 {
        for i in 1..=cp.e1 {
            for lambda in 0..cp.d2 {
                for j in 1..=cp.e2 {
                    if i as i64 == smu && j as i64 == snu {
                        x[col] = mu_bar[kappa] * nu_bar[lambda];
                    }
                    col += 1;
                }
            }
        }
    }
    Ok(x)
}

/// The rank-one Birch point `x_{κλ} = μ_κ ν_λ / s` of the transport
/// polytope.
pub fn birch_point_transport(tp: &TransportProblem) -> Result<Vec<Vec<f64>>> {
    tp.check()?;
    let s = tp.total_mass();
    Ok(tp
        .mu
        .iter()
        .map(|&m| tp.nu.iter().map(|&n| m * n / s).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ones_coefficients, toric_residual, validate};

    pub fn example_1_1() -> TransportProblem {
        TransportProblem::new(
            vec![7.0, 8.0],
            vec![4.0, 5.0, 6.0],
            vec![vec![1.0, 0.0, 1.0], vec![0.0, 2.0, 5.0]],
        )
        .unwrap()
    }

    #[test]
    fn transport_2x3_matches_reference_matrix() {
        let lp = build_transport(&example_1_1()).unwrap();
        let expected = vec![
            vec![1, 1, 1, 0, 0, 0],
            vec![0, 0, 0, 1, 1, 1],
            vec![1, 0, 0, 1, 0, 0],
            vec![0, 1, 0, 0, 1, 0],
        ];
        assert_eq!(lp.a, expected);
        assert_eq!(lp.b, vec![7.0, 8.0, 4.0, 5.0]);
        assert_eq!(lp.c, vec![1.0, 0.0, 1.0, 0.0, 2.0, 5.0]);
    }

    #[test]
    fn transport_2x2_smallest_case() {
        let tp = TransportProblem::new(
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let lp = build_transport(&tp).unwrap();
        assert_eq!(lp.a, vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1], vec![1, 0, 1, 0]]);
        assert_eq!(lp.b, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn transport_rejects_unbalanced() {
        assert!(TransportProblem::new(
            vec![1.0, 2.0],
            vec![1.0, 1.0],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .is_err());
    }

    #[test]
    fn transport_always_validates_with_ones_row_combination() {
        for (d1, d2) in [(2usize, 3usize), (3, 3), (4, 2), (5, 6)] {
            let tp = TransportProblem::new(
                (1..=d1).map(|v| v as f64).collect(),
                balanced_nu(d1, d2),
                vec![vec![0.0; d2]; d1],
            )
            .unwrap();
            let lp = build_transport(&tp).unwrap();
            assert!(validate(&lp).ok);
            assert!(ones_coefficients(&lp.a).is_some());
        }
    }

    fn balanced_nu(d1: usize, d2: usize) -> Vec<f64> {
        let total: f64 = (1..=d1).map(|v| v as f64).sum();
        let mut nu = vec![total / d2 as f64; d2];
        // nudge to keep entries distinct while staying balanced
        nu[0] += 0.25;
        nu[d2 - 1] -= 0.25;
        nu
    }

    pub fn conic_2222(cost: Vec<f64>, normalized: bool) -> ConicProblem {
        ConicProblem::new(2, 2, 2, 2, vec![1, 1], vec![1, 1], cost, normalized).unwrap()
    }

    #[test]
    fn conic_2222_matches_reference_matrix() {
        let cp = conic_2222(vec![0.0; 16], false);
        let lp = build_conic(&cp).unwrap();
        let expected = vec![
            vec![1, 1, 1, 1, 2, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2],
            vec![1, 2, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0],
            vec![0, 0, 1, 2, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0, 1, 2],
        ];
        assert_eq!(lp.a, expected);
        assert_eq!(lp.b, vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(lp.labels.as_ref().unwrap()[0], "x_1111");
        assert_eq!(lp.labels.as_ref().unwrap()[15], "x_2222");
    }

    #[test]
    fn conic_normalized_appends_ones_row() {
        let cp = conic_2222(vec![0.0; 16], true);
        let lp = build_conic(&cp).unwrap();
        assert_eq!(lp.num_rows(), 5);
        assert_eq!(lp.num_cols(), 16);
        assert_eq!(lp.a[4], vec![1i64; 16]);
        assert_eq!(lp.b[4], 1.0);
        // normalized build exposes the ones row directly
        let lambda = ones_coefficients(&lp.a).unwrap();
        let as_f64: Vec<f64> = lambda.iter().map(crate::exact::rat_to_f64).collect();
        assert_eq!(as_f64, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn conic_2223_column_sums() {
        let cp = ConicProblem::new(2, 2, 2, 3, vec![1, 2], vec![2, 3], vec![0.0; 24], false)
            .unwrap();
        let lp = build_conic(&cp).unwrap();
        assert_eq!(lp.num_cols(), 24);
        for j in 0..24 {
            let sum: i64 = lp.a.iter().map(|row| row[j]).sum();
            assert!((2..=5).contains(&sum), "column {j} sums to {sum}");
        }
    }

    #[test]
    fn conic_unnormalized_has_no_ones_combination() {
        for (d1, e1, d2, e2) in [(2, 2, 2, 2), (2, 3, 2, 2), (3, 2, 2, 3)] {
            let cp = ConicProblem::new(
                d1,
                e1,
                d2,
                e2,
                vec![1; d1],
                vec![1; d2],
                vec![0.0; d1 * e1 * d2 * e2],
                false,
            )
            .unwrap();
            let lp = build_conic(&cp).unwrap();
            assert!(ones_coefficients(&lp.a).is_none());
        }
    }

    #[test]
    fn conic_rejects_bad_parameters() {
        assert!(ConicProblem::new(1, 2, 2, 2, vec![1], vec![1, 1], vec![0.0; 8], false).is_err());
        assert!(ConicProblem::new(2, 2, 2, 2, vec![1, 3], vec![1, 1], vec![0.0; 16], false)
            .is_err());
    }

    #[test]
    fn feasible_point_is_a_conic_coupling() {
        let mut cp = conic_2222(vec![0.0; 16], true);
        cp.normalized = true;
        let x = conic_feasible_point(&cp).unwrap();
        let lp = build_conic(&cp).unwrap();
        assert!(lp.primal_infeasibility(&x) < 1e-12);
        let total: f64 = x.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // mass sits on (κ,2,λ,2) cells with value 1/4
        for (j, &v) in x.iter().enumerate() {
            let label = &lp.labels.as_ref().unwrap()[j];
            if v != 0.0 {
                assert!((v - 0.25).abs() < 1e-12);
                assert!(label.ends_with('2') && label.as_bytes()[3] == b'2', "{label}");
            }
        }
    }

    #[test]
    fn feasible_point_rejects_oversized_margins() {
        let cp = ConicProblem::new(2, 2, 2, 2, vec![2, 2], vec![1, 1], vec![0.0; 16], true)
            .unwrap();
        assert!(matches!(conic_feasible_point(&cp), Err(Error::Infeasible(_))));
    }

    #[test]
    fn birch_point_example_values() {
        let birch = birch_point_transport(&example_1_1()).unwrap();
        let expected = [[28.0, 35.0, 42.0], [32.0, 40.0, 48.0]];
        for (row, exp) in birch.iter().zip(expected.iter()) {
            for (&got, &e) in row.iter().zip(exp.iter()) {
                assert!((got - e / 15.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn birch_point_is_rank_one_and_on_the_variety() {
        let tp = TransportProblem::new(
            vec![2.0, 3.0, 4.0],
            vec![1.0, 3.0, 5.0],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        let birch = birch_point_transport(&tp).unwrap();
        for r in 0..2 {
            for s in r + 1..3 {
                for c in 0..2 {
                    for t in c + 1..3 {
                        let minor = birch[r][c] * birch[s][t] - birch[r][t] * birch[s][c];
                        assert!(minor.abs() < 1e-12);
                    }
                }
            }
        }
        let mut lp = build_transport(&tp).unwrap();
        lp.c = vec![0.0; 9];
        let flat: Vec<f64> = birch.iter().flatten().copied().collect();
        let report = toric_residual(&lp, &flat, 1.0).unwrap();
        assert!(report.toric_inf < 1e-10);
    }
}
