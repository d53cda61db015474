//! Combinatorial complexity of conic coupling, in exact arithmetic.
//!
//! The algebraic degree of the regularized conic transport problem equals
//! the normalized lattice volume of `conv(A ∪ 0)`. The closed form is
//!
//! `C(d₁+d₂, d₁)·[(e₁^{d₁}−1)(e₂^{d₂}−1) + d₁/(d₁+d₂)·(e₂^{d₂}−1) + d₂/(d₁+d₂)·(e₁^{d₁}−1)]`,
//!
//! cross-checked here by a naive exact triangulation of the point
//! configuration (beneath-beyond, integer determinants; desk scale only).

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive};

use crate::builders::{build_conic, ConicProblem};
use crate::exact;
use crate::{Error, Result};

/// Format parameters of a conic coupling instance; all at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConicShape {
    pub d1: usize,
    pub e1: usize,
    pub d2: usize,
    pub e2: usize,
}

impl ConicShape {
    pub fn new(d1: usize, e1: usize, d2: usize, e2: usize) -> Result<Self> {
        if d1 < 2 || e1 < 2 || d2 < 2 || e2 < 2 {
            return Err(Error::InvalidProblem(
                "conic shape parameters must all be at least 2".into(),
            ));
        }
        Ok(ConicShape { d1, e1, d2, e2 })
    }

    pub fn dim(&self) -> usize {
        self.d1 + self.d2
    }

    /// Columns of the (unnormalized) conic constraint matrix as lattice
    /// points in `ℤ^{d₁+d₂}`.
    pub fn column_points(&self) -> Vec<Vec<i64>> {
        let cp = ConicProblem::new(
            self.d1,
            self.e1,
            self.d2,
            self.e2,
            vec![1; self.d1],
            vec![1; self.d2],
            vec![0.0; self.d1 * self.e1 * self.d2 * self.e2],
            false,
        )
        .expect("shape already validated");
        let lp = build_conic(&cp).expect("builder accepts valid shapes");
        (0..lp.num_cols())
            .map(|j| lp.a.iter().map(|row| row[j]).collect())
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let k = k.min(n - k);
    let mut result = BigInt::one();
    for i in 0..k {
        result = result * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    result
}

fn pow_minus_one(e: usize, d: usize) -> BigInt {
    BigInt::from(e).pow(d as u32) - BigInt::one()
}

/// Degree of the toric variety of the conic matrix: the closed-form
/// lattice volume of `conv(A ∪ 0)`.
pub fn conic_degree(shape: &ConicShape) -> BigInt {
    let d1 = BigInt::from(shape.d1);
    let d2 = BigInt::from(shape.d2);
    let d = BigInt::from(shape.dim());
    let binom = binomial(shape.dim(), shape.d1);
    let v1 = pow_minus_one(shape.e1, shape.d1);
    let v2 = pow_minus_one(shape.e2, shape.d2);
    let big = |v: BigInt| Ratio::from_integer(v);
    let total = big(binom)
        * (big(v1.clone() * v2.clone())
            + Ratio::new(d1 * v2, d.clone())
            + Ratio::new(d2 * v1, d));
    assert!(total.denom().is_one(), "degree formula must be integral");
    total.to_integer()
}

/// Volume of `conv(A)` alone: the product polytope term.
pub fn conv_a_volume(shape: &ConicShape) -> BigInt {
    binomial(shape.dim(), shape.d1)
        * pow_minus_one(shape.e1, shape.d1)
        * pow_minus_one(shape.e2, shape.d2)
}

/// Per-inequality slacks of a membership query.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub inside: bool,
    /// Slack of each of the `d+2` cone inequalities, nonnegative iff
    /// satisfied: the `d` coordinates, then
    /// `e₁·Σ_λ y − Σ_κ y` and `e₂·Σ_κ y − Σ_λ y`.
    pub slacks: Vec<f64>,
}

/// Closed-form feasibility cone test for conic coupling.
pub fn cone_membership(shape: &ConicShape, y: &[f64]) -> Result<MembershipReport> {
    let d = shape.dim();
    if y.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "point has dimension {}, expected {d}",
            y.len()
        )));
    }
    let sum_mu: f64 = y[..shape.d1].iter().sum();
    let sum_nu: f64 = y[shape.d1..].iter().sum();
    let mut slacks: Vec<f64> = y.to_vec();
    slacks.push(shape.e1 as f64 * sum_nu - sum_mu);
    slacks.push(shape.e2 as f64 * sum_mu - sum_nu);
    let inside = slacks.iter().all(|&s| s >= 0.0);
    Ok(MembershipReport { inside, slacks })
}

/// A halfspace `{y : normal·y ≤ offset}` with integer data.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Halfspace {
    pub normal: Vec<i64>,
    pub offset: i64,
}

/// Irredundant facet list of `conv(A ∪ 0)`: the `d+2` cone inequalities
/// plus the two mass caps; `d+4` in total.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetSystem {
    pub halfspaces: Vec<Halfspace>,
}

pub fn conv_a0_facets(shape: &ConicShape) -> FacetSystem {
    let d = shape.dim();
    let mut halfspaces = Vec::with_capacity(d + 4);
    for i in 0..d {
        let mut normal = vec![0i64; d];
        normal[i] = -1;
        halfspaces.push(Halfspace { normal, offset: 0 });
    }
    let mut cone1 = vec![1i64; shape.d1];
    cone1.extend(std::iter::repeat(-(shape.e1 as i64)).take(shape.d2));
    halfspaces.push(Halfspace { normal: cone1, offset: 0 });
    let mut cone2 = vec![-(shape.e2 as i64); shape.d1];
    cone2.extend(std::iter::repeat(1i64).take(shape.d2));
    halfspaces.push(Halfspace { normal: cone2, offset: 0 });
    let mut cap1 = vec![1i64; shape.d1];
    cap1.extend(std::iter::repeat(0i64).take(shape.d2));
    halfspaces.push(Halfspace { normal: cap1, offset: shape.e1 as i64 });
    let mut cap2 = vec![0i64; shape.d1];
    cap2.extend(std::iter::repeat(1i64).take(shape.d2));
    halfspaces.push(Halfspace { normal: cap2, offset: shape.e2 as i64 });
    FacetSystem { halfspaces }
}

// --- exact triangulation oracle ---------------------------------------

/// Fraction-free (Bareiss) determinant of a small integer matrix.
fn det_i128(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

#[derive(Debug, Clone)]
struct Facet {
    /// Indices of the `d` vertices spanning this boundary simplex.
    verts: Vec<usize>,
    /// Scaled inner reference: sum of the `d+1` vertices of the region
    /// simplex this facet bounds (i.e. centroid × (d+1)).
    inner: Vec<i128>,
}

/// Exact incremental triangulation of a lattice point configuration.
pub struct HullOracle {
    dim: usize,
    points: Vec<Vec<i128>>,
    volume: i128,
    boundary: Vec<Facet>,
}

impl HullOracle {
    pub fn volume(&self) -> i128 {
        self.volume
    }

    /// Orientation determinant of `q` against a facet, signed so that
    /// the facet's inner reference point is negative.
    fn orientation(&self, facet: &Facet, q: &[i128]) -> i128 {
        let dim = self.dim;
        let base = &self.points[facet.verts[0]];
        let mut rows: Vec<Vec<i128>> = facet.verts[1..]
            .iter()
            .map(|&v| (0..dim).map(|k| self.points[v][k] - base[k]).collect())
            .collect();
        rows.push((0..dim).map(|k| q[k] - base[k]).collect());
        let det = det_i128(rows);
        // normalize the sign against the inner reference, which sits at
        // inner/(d+1); determinants are linear in the last row
        let mut inner_rows: Vec<Vec<i128>> = facet.verts[1..]
            .iter()
            .map(|&v| (0..dim).map(|k| self.points[v][k] - base[k]).collect())
            .collect();
        inner_rows
            .push((0..dim).map(|k| facet.inner[k] - (dim as i128 + 1) * base[k]).collect());
        let inner_det = det_i128(inner_rows);
        debug_assert!(inner_det != 0, "inner reference on the facet hyperplane");
        if inner_det > 0 {
            -det
        } else {
            det
        }
    }

    fn simplex_volume(&self, verts: &[usize]) -> i128 {
        let dim = self.dim;
        let base = &self.points[verts[0]];
        let rows: Vec<Vec<i128>> = verts[1..]
            .iter()
            .map(|&v| (0..dim).map(|k| self.points[v][k] - base[k]).collect())
            .collect();
        det_i128(rows).abs()
    }

    fn insert(&mut self, idx: usize) {
        let q = self.points[idx].clone();
        let visible: Vec<usize> = (0..self.boundary.len())
            .filter(|&f| self.orientation(&self.boundary[f], &q) > 0)
            .collect();
        if visible.is_empty() {
            return; // inside or on the boundary of the current region
        }
        // horizon ridges appear in exactly one visible facet
        let mut ridge_counts: std::collections::HashMap<Vec<usize>, (usize, usize)> =
            std::collections::HashMap::new();
        for &f in &visible {
            let verts = &self.boundary[f].verts;
            for drop in 0..verts.len() {
                let mut ridge: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != drop)
                    .map(|(_, &v)| v)
                    .collect();
                ridge.sort_unstable();
                let entry = ridge_counts.entry(ridge).or_insert((0, f));
                entry.0 += 1;
            }
        }
        let mut new_facets = Vec::new();
        for &f in &visible {
            let mut simplex = self.boundary[f].verts.clone();
            simplex.push(idx);
            self.volume += self.simplex_volume(&simplex);
        }
        for (ridge, (count, owner)) in ridge_counts {
            if count != 1 {
                continue;
            }
            // inner reference: centroid of the pyramid over the owning
            // visible facet
            let mut inner = vec![0i128; self.dim];
            for &v in &self.boundary[owner].verts {
                for k in 0..self.dim {
                    inner[k] += self.points[v][k];
                }
            }
            for k in 0..self.dim {
                inner[k] += q[k];
            }
            let mut verts = ridge;
            verts.push(idx);
            new_facets.push(Facet { verts, inner });
        }
        let visible_set: std::collections::HashSet<usize> = visible.into_iter().collect();
        let mut boundary = Vec::with_capacity(self.boundary.len());
        for (f, facet) in self.boundary.drain(..).enumerate() {
            if !visible_set.contains(&f) {
                boundary.push(facet);
            }
        }
        boundary.extend(new_facets);
        self.boundary = boundary;
    }

    /// Distinct supporting hyperplanes of the boundary, as primitive
    /// integer halfspaces `normal·y ≤ offset` with the region inside.
    pub fn facet_hyperplanes(&self) -> Vec<Halfspace> {
        let dim = self.dim;
        let mut out: Vec<Halfspace> = Vec::new();
        for facet in &self.boundary {
            let base = &self.points[facet.verts[0]];
            let edges: Vec<Vec<i64>> = facet.verts[1..]
                .iter()
                .map(|&v| (0..dim).map(|k| (self.points[v][k] - base[k]) as i64).collect())
                .collect();
            let kernel = exact::integer_kernel_basis(&edges);
            debug_assert_eq!(kernel.len(), 1);
            let mut normal: Vec<i64> = kernel[0]
                .iter()
                .map(|v| v.to_i64().expect("small normals"))
                .collect();
            let mut offset: i64 = normal
                .iter()
                .zip(base.iter())
                .map(|(&n, &b)| n * b as i64)
                .sum();
            // orient outward: inner reference must satisfy normal·y < offset
            let inner_dot: i128 = normal
                .iter()
                .zip(&facet.inner)
                .map(|(&n, &v)| n as i128 * v)
                .sum();
            if inner_dot > (dim as i128 + 1) * offset as i128 {
                normal.iter_mut().for_each(|v| *v = -*v);
                offset = -offset;
            }
            let hs = Halfspace { normal, offset };
            if !out.contains(&hs) {
                out.push(hs);
            }
        }
        out.sort();
        out
    }
}

/// Triangulate the convex hull of integer points, exactly.
pub fn triangulate_hull(points: &[Vec<i64>]) -> Result<HullOracle> {
    let Some(first) = points.first() else {
        return Err(Error::Degenerate("no points".into()));
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("ragged point list".into()));
    }
    // greedy affinely independent seed simplex
    let mut seed: Vec<usize> = vec![0];
    for (i, _) in points.iter().enumerate().skip(1) {
        if seed.len() == dim + 1 {
            break;
        }
        let mut candidate = seed.clone();
        candidate.push(i);
        let diffs: Vec<Vec<i64>> = candidate[1..]
            .iter()
            .map(|&v| {
                (0..dim)
                    .map(|k| points[v][k] - points[candidate[0]][k])
                    .collect()
            })
            .collect();
        if exact::rank_i64(&diffs) == candidate.len() - 1 {
            seed = candidate;
        }
    }
    if seed.len() != dim + 1 {
        return Err(Error::Degenerate(format!(
            "points span affine dimension {} < {dim}",
            seed.len() - 1
        )));
    }
    let pts: Vec<Vec<i128>> = points
        .iter()
        .map(|p| p.iter().map(|&v| v as i128).collect())
        .collect();
    let mut inner = vec![0i128; dim];
    for &v in &seed {
        for k in 0..dim {
            inner[k] += pts[v][k];
        }
    }
    let mut boundary = Vec::with_capacity(dim + 1);
    for drop in 0..seed.len() {
        let verts: Vec<usize> = seed
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != drop)
            .map(|(_, &v)| v)
            .collect();
        boundary.push(Facet { verts, inner: inner.clone() });
    }
    let mut hull = HullOracle { dim, points: pts, volume: 0, boundary };
    hull.volume = hull.simplex_volume(&seed);
    let seed_set: std::collections::HashSet<usize> = seed.into_iter().collect();
    for i in 0..points.len() {
        if !seed_set.contains(&i) {
            hull.insert(i);
        }
    }
    Ok(hull)
}

/// Normalized lattice volume (`d! ×` Euclidean volume) of the convex
/// hull of the given integer points.
pub fn volume_oracle(points: &[Vec<i64>]) -> Result<i128> {
    Ok(triangulate_hull(points)?.volume())
}

/// `conv(A ∪ 0)` as a point list for the oracle.
pub fn column_points_with_origin(shape: &ConicShape) -> Vec<Vec<i64>> {
    let mut points = vec![vec![0i64; shape.dim()]];
    points.extend(shape.column_points());
    points
}
