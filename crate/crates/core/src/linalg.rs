//! Small dense f64 helpers shared by the solvers and the path tracker.

/// Solve `a·x = b` by LU with partial pivoting. Returns `None` when the
/// matrix is numerically singular. `a` is consumed as scratch space.
pub(crate) fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            // total_cmp sorts NaN last, so a NaN pivot is caught below
            a[r][col].abs().total_cmp(&a[s][col].abs())
        })?;
        if !(a[pivot][col].abs() >= 1e-300 && a[pivot][col].is_finite()) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Least-squares solve of `Mᵀ q ≈ v` for a `d × n` matrix `M` via the
/// normal equations `(M Mᵀ) q = M v`.
pub(crate) fn rowspace_projection(m: &[Vec<i64>], v: &[f64]) -> Option<Vec<f64>> {
    let d = m.len();
    let gram: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|r| {
                    m[i].iter()
                        .zip(&m[r])
                        .map(|(&a, &b)| (a as f64) * (b as f64))
                        .sum()
                })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = m
        .iter()
        .map(|row| row.iter().zip(v).map(|(&a, &x)| a as f64 * x).sum())
        .collect();
    lu_solve(gram, rhs)
}

/// Numerically stable `log Σ exp(t_i)`.
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|&t| (t - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_random_system() {
        let a = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let x = lu_solve(a.clone(), vec![5.0, 6.0, 3.0]).unwrap();
        for (row, &rhs) in a.iter().zip(&[5.0, 6.0, 3.0]) {
            let ax: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum();
            assert!((ax - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(lu_solve(a, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn log_sum_exp_handles_large_shifts() {
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
