//! Exact rational linear algebra used for certificates.
//!
//! Kernel vectors, rank checks, and basic solves are done over `Q` with
//! arbitrary precision; floating point never enters here.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

pub type Rat = Ratio<BigInt>;

pub fn rat_i64(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Exact rational from an f64. Every finite f64 is a dyadic rational,
/// so this is lossless.
pub fn rat_f64(v: f64) -> Option<Rat> {
    Rat::from_float(v)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let numer = r.numer();
    let denom = r.denom();
    // good enough at desk scale; values stay in f64 range
    let n: f64 = numer.to_string().parse().unwrap_or(f64::NAN);
    let d: f64 = denom.to_string().parse().unwrap_or(f64::NAN);
    n / d
}

/// Row-reduce `m` in place; returns the pivot column of each pivot row.
fn row_reduce(m: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].clone();
        for entry in m[row].iter_mut() {
            *entry /= inv.clone();
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..cols {
                    let sub = factor.clone() * m[row][c].clone();
                    m[r][c] -= sub;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Rank of an integer matrix over the rationals.
pub fn rank_i64(m: &[Vec<i64>]) -> usize {
    let mut work: Vec<Vec<Rat>> = m
        .iter()
        .map(|row| row.iter().map(|&v| rat_i64(v)).collect())
        .collect();
    row_reduce(&mut work).len()
}

fn content(v: &[BigInt]) -> BigInt {
    v.iter()
        .fold(BigInt::zero(), |acc, x| acc.gcd(&x.abs()))
}

/// Normalize an integer vector to content 1 with the first nonzero
/// entry positive.
pub fn normalize_integer_vector(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = content(&v);
    if !g.is_zero() && !g.is_one() {
        for entry in v.iter_mut() {
            *entry = &*entry / &g;
        }
    }
    if let Some(first) = v.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for entry in v.iter_mut() {
                *entry = -entry.clone();
            }
        }
    }
    v
}

/// Exact integer basis of `ker(m)`, one content-1 vector per free column.
pub fn integer_kernel_basis(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    if m.is_empty() {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut work: Vec<Vec<Rat>> = m
        .iter()
        .map(|row| row.iter().map(|&v| rat_i64(v)).collect())
        .collect();
    let pivots = row_reduce(&mut work);
    let pivot_set: Vec<bool> = {
        let mut set = vec![false; cols];
        for &p in &pivots {
            set[p] = true;
        }
        set
    };
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set[free] {
            continue;
        }
        // x_free = 1, pivot variables from the reduced rows
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -work[row][free].clone();
        }
        // clear denominators
        let lcm = v
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let ints: Vec<BigInt> = v
            .iter()
            .map(|r| r.numer() * (&lcm / r.denom()))
            .collect();
        basis.push(normalize_integer_vector(ints));
    }
    basis
}

/// One exact solution of `a·x = b` (free variables set to zero), or
/// `None` if the system is inconsistent.
pub fn solve_rational(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let rows = a.len();
    assert_eq!(rows, b.len(), "rhs length mismatch");
    if rows == 0 {
        return Some(Vec::new());
    }
    let cols = a[0].len();
    let mut work: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = row_reduce(&mut work);
    // inconsistent iff a pivot lands in the rhs column
    if pivots.iter().any(|&p| p == cols) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = work[row][cols].clone();
    }
    Some(x)
}

/// Multiply an integer matrix by an integer vector exactly.
pub fn mat_vec_big(m: &[Vec<i64>], v: &[BigInt]) -> Vec<BigInt> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .map(|(&a, x)| BigInt::from(a) * x)
                .sum()
        })
        .collect()
}
