//! Exact dual coordinate ascent for arbitrary nonnegative integer `A`.
//!
//! Optimizing one dual potential `p_i` at a time reduces to finding the
//! unique positive root of a generalized polynomial
//! `Σ_j a_{ij} κ_j E^{a_{ij}} = b_i` in `E = exp(p_i/ε)`, where the `κ_j`
//! collect the contributions of the frozen coordinates. For transport
//! matrices every exponent is 1 and the update collapses to the Sinkhorn
//! closed form; for conic coupling it is the mass-weighted polynomial of
//! the unbalanced dual.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{solution_report, EntropicSolution, StandardFormLP};
use crate::{Error, Result};

/// Unique positive root of `E ↦ Σ_e coeff_e · E^e = target`, for positive
/// integer exponents and nonnegative coefficients (strictly increasing on
/// `(0, ∞)`). Bracketing bisection, then Newton polish.
pub fn positive_root(terms: &[(u32, f64)], target: f64) -> Result<f64> {
    if target <= 0.0 || !target.is_finite() {
        return Err(Error::InvalidProblem(format!("target must be positive, got {target}")));
    }
    if terms.iter().all(|&(_, c)| c <= 0.0) {
        return Err(Error::InvalidProblem("all coefficients are zero".into()));
    }
    if terms.iter().any(|&(e, c)| e == 0 || c < 0.0) {
        return Err(Error::InvalidProblem("exponents must be >= 1, coefficients >= 0".into()));
    }
    // closed forms for the overwhelmingly common shapes
    match terms {
        [(e, c)] if *c > 0.0 => {
            return Ok((target / c).powf(1.0 / *e as f64));
        }
        [(1, c1), (2, c2)] | [(2, c2), (1, c1)] if *c2 > 0.0 => {
            // c₂x² + c₁x = t, positive branch in cancellation-free form
            let disc = c1 * c1 + 4.0 * c2 * target;
            return Ok(2.0 * target / (c1 + disc.sqrt()));
        }
        _ => {}
    }
    let eval = |x: f64| -> f64 { terms.iter().map(|&(e, c)| c * x.powi(e as i32)).sum() };
    let deriv =
        |x: f64| -> f64 { terms.iter().map(|&(e, c)| c * e as f64 * x.powi(e as i32 - 1)).sum() };

    // bracket by doubling/halving from 1
    let (mut lo, mut hi);
    if eval(1.0) < target {
        lo = 1.0;
        hi = 2.0;
        while eval(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::NoConvergence { max_iter: 0, residual: target });
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while eval(lo) > target {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::NoConvergence { max_iter: 0, residual: target });
            }
        }
    }
    // the map is increasing and convex on x > 0, so Newton from the
    // upper end of the bracket converges monotonically; a few bisection
    // steps first keep the bracket tight in pathological scalings
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut root: f64 = hi;
    for _ in 0..60 {
        let f = eval(root) - target;
        let df = deriv(root);
        if df <= 0.0 {
            break;
        }
        let next = (root - f / df).clamp(lo, hi);
        if (next - root).abs() <= f64::EPSILON * root {
            root = next;
            break;
        }
        root = next;
    }
    Ok(root)
}

/// Coefficients of the coordinate-`row` dual equation, grouped by
/// exponent: entry `(e, Σ_{j: a_{row,j}=e} e · κ_j)` with
/// `κ_j = exp((Σ_{r≠row} a_{rj} p_r − c_j)/ε)`. Exposed for cross-checks
/// against the closed-form conic coefficients.
pub fn coordinate_polynomial(
    lp: &StandardFormLP,
    p: &[f64],
    epsilon: f64,
    row: usize,
) -> Vec<(u32, f64)> {
    let (terms, shift) = grouped_terms(lp, p, epsilon, row);
    terms
        .into_iter()
        .map(|(e, c)| (e, c * shift.exp()))
        .collect()
}

/// Exponent-grouped coefficients, max-shifted: returns `(terms, m)` with
/// true coefficients `terms · exp(m)`.
fn grouped_terms(
    lp: &StandardFormLP,
    p: &[f64],
    epsilon: f64,
    row: usize,
) -> (BTreeMap<u32, f64>, f64) {
    let mut logs: Vec<(u32, f64)> = Vec::new();
    for (j, &a_ij) in lp.a[row].iter().enumerate() {
        if a_ij <= 0 {
            continue;
        }
        let mut dot = 0.0;
        for (r, row_r) in lp.a.iter().enumerate() {
            if r != row {
                dot += row_r[j] as f64 * p[r];
            }
        }
        logs.push((a_ij as u32, (dot - lp.c[j]) / epsilon));
    }
    let m = logs.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
    let mut terms: BTreeMap<u32, f64> = BTreeMap::new();
    for (e, l) in logs {
        *terms.entry(e).or_insert(0.0) += e as f64 * (l - m).exp();
    }
    (terms, m)
}

/// Single-coordinate reference update; the solver loop below uses cached
/// activations instead, and tests compare the two.
#[cfg_attr(not(test), allow(dead_code))]
fn update_coordinate(lp: &StandardFormLP, p: &mut [f64], epsilon: f64, row: usize) -> Result<()> {
    let b_i = lp.b[row];
    if b_i <= 0.0 {
        return Err(Error::InvalidProblem(format!(
            "b[{row}] = {b_i} must be positive for a nonzero row"
        )));
    }
    let (terms, shift) = grouped_terms(lp, p, epsilon, row);
    let flat: Vec<(u32, f64)> = terms.into_iter().collect();
    let scaled_target = b_i * (-shift).exp();
    let root = positive_root(&flat, scaled_target)?;
    p[row] = epsilon * root.ln();
    Ok(())
}

/// Primal point implied by the potentials: `x_j = exp((a_j·p − c_j)/ε)`.
pub fn primal_point(lp: &StandardFormLP, p: &[f64], epsilon: f64) -> Vec<f64> {
    lp.apply_transpose(p)
        .iter()
        .zip(&lp.c)
        .map(|(&s, &c)| ((s - c) / epsilon).exp())
        .collect()
}

/// Cyclic dual coordinate ascent, ascending row order.
pub fn ascent_solve(
    lp: &StandardFormLP,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    ascent_solve_seeded(lp, epsilon, tol, max_iter, None)
}

/// Like [`ascent_solve`] with an optional seed that randomizes the
/// coordinate order each sweep.
pub fn ascent_solve_seeded(
    lp: &StandardFormLP,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
    seed: Option<u64>,
) -> Result<EntropicSolution> {
    let d = lp.num_rows();
    let n = lp.num_cols();
    let mut p = vec![0.0; d];
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    // positive support of each row, grouped by exponent value
    let support: Vec<Vec<(u32, Vec<usize>)>> = lp
        .a
        .iter()
        .map(|row| {
            let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for (j, &a_ij) in row.iter().enumerate() {
                if a_ij > 0 {
                    groups.entry(a_ij as u32).or_default().push(j);
                }
            }
            groups.into_iter().collect()
        })
        .collect();
    // cached column activations s_j = Σ_r a_{rj} p_r, exact at p = 0
    let mut s = vec![0.0; n];
    let mut terms: Vec<(u32, f64)> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut order: Vec<usize> = (0..d).collect();
    for sweep in 0..max_iter {
        iterations = sweep + 1;
        if sweep % 65_536 == 0 && sweep > 0 {
            // rebuild the cached activations so incremental drift cannot
            // accumulate over very long runs
            for (j, sj) in s.iter_mut().enumerate() {
                *sj = lp.a.iter().zip(&p).map(|(row, &pi)| row[j] as f64 * pi).sum();
            }
        }
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        for &i in &order {
            let b_i = lp.b[i];
            if b_i <= 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "b[{i}] = {b_i} must be positive for a nonzero row"
                )));
            }
            // log-coefficients with the own-row contribution removed
            let mut shift = f64::NEG_INFINITY;
            for (e, cols) in &support[i] {
                for &j in cols {
                    let l = (s[j] - *e as f64 * p[i] - lp.c[j]) / epsilon;
                    shift = shift.max(l);
                }
            }
            terms.clear();
            for (e, cols) in &support[i] {
                let mut acc = 0.0;
                for &j in cols {
                    acc += ((s[j] - *e as f64 * p[i] - lp.c[j]) / epsilon - shift).exp();
                }
                terms.push((*e, *e as f64 * acc));
            }
            let root = positive_root(&terms, b_i * (-shift).exp())?;
            let delta = epsilon * root.ln() - p[i];
            p[i] += delta;
            for (e, cols) in &support[i] {
                for &j in cols {
                    s[j] += *e as f64 * delta;
                }
            }
        }
        // convergence check straight from the cached activations
        let mut res = 0.0f64;
        let x_now: Vec<f64> = s
            .iter()
            .zip(&lp.c)
            .map(|(&sj, &cj)| ((sj - cj) / epsilon).exp())
            .collect();
        for (row, &b_i) in lp.a.iter().zip(&lp.b) {
            let mut ax = 0.0;
            for (j, &a_ij) in row.iter().enumerate() {
                if a_ij != 0 {
                    ax += a_ij as f64 * x_now[j];
                }
            }
            res = res.max((ax - b_i).abs());
        }
        if res <= tol {
            converged = true;
            break;
        }
    }
    let x = primal_point(lp, &p, epsilon);
    let residuals = solution_report(lp, &x, Some(&p), epsilon);
    Ok(EntropicSolution { x, p, epsilon, iterations, converged, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_conic, build_transport, ConicProblem, TransportProblem};
    use crate::model::toric_residual;
    use crate::sinkhorn::sinkhorn_solve;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn positive_root_linear() {
        assert!((positive_root(&[(1, 2.0)], 4.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn positive_root_quadratic() {
        assert!((positive_root(&[(1, 1.0), (2, 1.0)], 6.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn positive_root_residual_check() {
        let terms = [(1, 0.5), (3, 0.25)];
        let root = positive_root(&terms, 10.0).unwrap();
        let value = 0.5 * root + 0.25 * root.powi(3);
        assert!((value - 10.0).abs() <= 1e-12 * 10.0);
    }

    #[test]
    fn positive_root_rejects_empty() {
        assert!(positive_root(&[], 1.0).is_err());
        assert!(positive_root(&[(1, 0.0)], 1.0).is_err());
    }

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
    fn coordinate_update_zeroes_its_residual() {
        let lp = example_1_1_lp();
        let mut p = vec![0.1, -0.2, 0.05, 0.3];
        for i in 0..4 {
            update_coordinate(&lp, &mut p, 1.0, i).unwrap();
            let x = primal_point(&lp, &p, 1.0);
            let ax: f64 = lp.a[i].iter().zip(&x).map(|(&a, &v)| a as f64 * v).sum();
            assert!((ax - lp.b[i]).abs() < 1e-10, "row {i}: {ax} vs {}", lp.b[i]);
        }
    }

    #[test]
    fn transport_updates_match_sinkhorn_closed_form() {
        // all exponents equal 1, so each update is the Sinkhorn formula
        let lp = example_1_1_lp();
        let eps = 1.0;
        let p = vec![0.4, -0.3, 0.2, 0.1];
        for row in 0..4 {
            let terms = coordinate_polynomial(&lp, &p, eps, row);
            assert_eq!(terms.len(), 1);
            let (e, coeff) = terms[0];
            assert_eq!(e, 1);
            // closed form: E = b_i / Σ_j κ_j
            let mut p2 = p.clone();
            update_coordinate(&lp, &mut p2, eps, row).unwrap();
            let expected = eps * (lp.b[row] / coeff).ln();
            assert!((p2[row] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_sinkhorn_on_random_transport() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let d1 = 3;
        let d2 = 4;
        let mu: Vec<f64> = (0..d1).map(|_| rng.gen_range(1..9) as f64).collect();
        let total: f64 = mu.iter().sum();
        let mut nu: Vec<f64> = (0..d2).map(|_| rng.gen_range(0.5..1.5)).collect();
        let scale = total / nu.iter().sum::<f64>();
        nu.iter_mut().for_each(|v| *v *= scale);
        let cost: Vec<Vec<f64>> =
            (0..d1).map(|_| (0..d2).map(|_| rng.gen_range(0..8) as f64).collect()).collect();
        let tp = TransportProblem::new(mu, nu, cost).unwrap();
        let lp = build_transport(&tp).unwrap();
        let ascent = ascent_solve(&lp, 1.0, 1e-11, 50_000).unwrap();
        let sinkhorn = sinkhorn_solve(&tp, 1.0, 1e-11, 50_000).unwrap();
        assert!(ascent.converged && sinkhorn.converged);
        for (a, s) in ascent.x.iter().zip(&sinkhorn.x) {
            assert!((a - s).abs() < 1e-8);
        }
    }

    #[test]
    fn conic_kappa_terms_match_gamma_coefficients() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cost: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..3.0)).collect();
        let cp = ConicProblem::new(2, 2, 2, 2, vec![1, 1], vec![1, 1], cost.clone(), true)
            .unwrap();
        let lp = build_conic(&cp).unwrap();
        let eps = 1.0;
        // potentials: rows 0..2 are f, 2..4 are g, 4 is h
        let p = vec![0.3, -0.1, 0.2, -0.4, 0.15];
        let (g, h) = (&p[2..4], p[4]);
        for kappa in 0..2usize {
            let terms = coordinate_polynomial(&lp, &p, eps, kappa);
            for &(i, coeff) in &terms {
                // γ_{κ,i} = Σ_{λ,j} exp((h + j g_λ − c_{κ,i,λ,j})/ε)
                let mut gamma = 0.0;
                for lambda in 0..2usize {
                    for j in 1..=2usize {
                        let idx = kappa * 8 + (i as usize - 1) * 4 + lambda * 2 + (j - 1);
                        gamma += ((h + j as f64 * g[lambda] - cost[idx]) / eps).exp();
                    }
                }
                assert!(
                    (coeff - i as f64 * gamma).abs() <= 1e-12 * coeff.abs().max(1.0),
                    "exponent {i}: {coeff} vs {}",
                    i as f64 * gamma
                );
            }
        }
    }

    #[test]
    fn normalization_update_has_closed_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let cost: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..3.0)).collect();
        let cp = ConicProblem::new(2, 2, 2, 2, vec![1, 1], vec![1, 1], cost, true).unwrap();
        let lp = build_conic(&cp).unwrap();
        let eps = 1.0;
        let mut p = vec![0.3, -0.1, 0.2, -0.4, 0.0];
        update_coordinate(&lp, &mut p, eps, 4).unwrap();
        // exp(h/ε) = 1 / Σ exp((i f_κ + j g_λ − c)/ε)
        let mut denom = 0.0;
        for (j, &a_hj) in lp.a[4].iter().enumerate() {
            assert_eq!(a_hj, 1);
            let dot: f64 = (0..4).map(|r| lp.a[r][j] as f64 * p[r]).sum();
            denom += ((dot - lp.c[j]) / eps).exp();
        }
        assert!(((p[4] / eps).exp() - 1.0 / denom).abs() < 1e-12);
    }

    #[test]
    fn dual_objective_nondecreasing_per_update() {
        let lp = example_1_1_lp();
        let eps = 1.0;
        let mut p = vec![0.0; 4];
        let objective = |p: &[f64]| -> f64 {
            let bp: f64 = lp.b.iter().zip(p).map(|(&b, &pi)| b * pi).sum();
            let barrier: f64 = primal_point(&lp, p, eps).iter().sum();
            bp - eps * barrier
        };
        let mut last = objective(&p);
        for _ in 0..20 {
            for i in 0..4 {
                update_coordinate(&lp, &mut p, eps, i).unwrap();
                let now = objective(&p);
                assert!(now >= last - 1e-12, "{now} < {last}");
                last = now;
            }
        }
    }

    #[test]
    fn iterates_stay_on_the_variety() {
        let lp = example_1_1_lp();
        let mut p = vec![0.0; 4];
        for _ in 0..10 {
            for i in 0..4 {
                update_coordinate(&lp, &mut p, 1.0, i).unwrap();
            }
            let x = primal_point(&lp, &p, 1.0);
            let report = toric_residual(&lp, &x, 1.0).unwrap();
            assert!(report.toric_inf < 1e-9);
        }
    }

    #[test]
    fn rejects_nonpositive_rhs() {
        let lp = StandardFormLP::new(vec![vec![1, 1]], vec![0.0], vec![0.0, 0.0]).unwrap();
        assert!(ascent_solve(&lp, 1.0, 1e-8, 10).is_err());
    }
}
