//! Majorization, permutohedra `S(y)` and the simplex figure data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free::beta_vector;
use crate::prob::ProbabilityVector;

/// Partial-sum excess at or below this counts as majorized.
pub const MAJORIZATION_TOL: f64 = 1e-12;
const HULL_RESIDUAL_TOL: f64 = 1e-9;
const HULL_MAX_K: usize = 5;

/// Cumulative sums of the entries in nonincreasing order.
pub fn partial_sums(x: &ProbabilityVector) -> Vec<f64> {
    let mut acc = 0.0;
    x.sorted_desc()
        .entries()
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub partial_sums_x: Vec<f64>,
    pub partial_sums_y: Vec<f64>,
    /// `max_j (s_j(x) − s_j(y))₊`.
    pub violation: f64,
    /// 1-based index attaining the violation, if positive.
    pub worst_index: Option<usize>,
    pub majorized: bool,
}

fn padded_pair(x: &ProbabilityVector, y: &ProbabilityVector) -> (ProbabilityVector, ProbabilityVector) {
    let len = x.len().max(y.len());
    (x.zero_padded(len), y.zero_padded(len))
}

/// Tests `x ≺ y`, zero-padding the shorter vector.
pub fn majorizes(y: &ProbabilityVector, x: &ProbabilityVector) -> MajorizationReport {
    let (x, y) = padded_pair(x, y);
    let sx = partial_sums(&x);
    let sy = partial_sums(&y);
    let mut violation = 0.0;
    let mut worst_index = None;
    for (j, (a, b)) in sx.iter().zip(&sy).enumerate() {
        let excess = a - b;
        if excess > violation {
            violation = excess;
            worst_index = Some(j + 1);
        }
    }
    MajorizationReport {
        partial_sums_x: sx,
        partial_sums_y: sy,
        violation,
        worst_index,
        majorized: violation <= MAJORIZATION_TOL,
    }
}

/// How far `x` sits outside the permutohedron `S(beta)`, measured as the
/// largest positive partial-sum excess. Zero exactly when `x ≺ beta`.
pub fn polytope_violation(x: &ProbabilityVector, beta: &ProbabilityVector) -> f64 {
    majorizes(beta, x).violation
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Nonnegative least squares (Lawson–Hanson active set): `min ‖A z − b‖, z ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    let n = a.ncols();
    let mut z = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut full = DVector::zeros(n);
        for (c, &i) in idx.iter().enumerate() {
            full[i] = sol[c];
        }
        full
    };

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &z);
        let candidate = (0..n)
            .filter(|&i| !passive[i] && w[i] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(enter) = candidate else { break };
        passive[enter] = true;
        loop {
            let s = solve_passive(&passive);
            let infeasible: Vec<usize> = (0..n).filter(|&i| passive[i] && s[i] <= 0.0).collect();
            if infeasible.is_empty() {
                z = s;
                break;
            }
            let step = infeasible
                .iter()
                .map(|&i| z[i] / (z[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            z += (s - &z) * step;
            for i in 0..n {
                if passive[i] && z[i] <= tol {
                    passive[i] = false;
                    z[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    z
}

/// Decides whether `x` is a convex combination of the coordinate permutations
/// of `y` by a nonnegative least-squares feasibility solve over all `k!`
/// permutations. Independent of the partial-sum criterion.
pub fn hull_membership_bruteforce(x: &ProbabilityVector, y: &ProbabilityVector) -> Result<bool> {
    let (x, y) = padded_pair(x, y);
    let k = x.len();
    if k > HULL_MAX_K {
        return Err(Error::TooLarge(format!("k = {k} exceeds {HULL_MAX_K} for the brute-force hull test")));
    }
    let perms = permutations(k);
    // Rows 0..k: coordinates; row k: the weights sum to one.
    let a = DMatrix::from_fn(k + 1, perms.len(), |r, c| if r < k { y.entries()[perms[c][r]] } else { 1.0 });
    let b = DVector::from_iterator(k + 1, x.entries().iter().copied().chain(std::iter::once(1.0)));
    let weights = nnls(&a, &b, 1e-15);
    let residual = (&a * &weights - &b).norm();
    Ok(residual <= HULL_RESIDUAL_TOL)
}

/// Outline of `S(β^(t))` for `k = 3` in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPolygon {
    pub t: f64,
    pub beta: ProbabilityVector,
    /// The six permutations of `beta`, in counterclockwise order.
    pub vertices: Vec<[f64; 3]>,
    /// Closed polyline through the vertices, `resolution` points per edge.
    pub points: Vec<[f64; 2]>,
}

/// Standard embedding of the triangle: `e₁ ↦ (0,0)`, `e₂ ↦ (1,0)`, `e₃ ↦ (1/2, √3/2)`.
pub fn barycentric_to_plane(p: &[f64; 3]) -> [f64; 2] {
    [p[1] + 0.5 * p[2], 0.5 * 3f64.sqrt() * p[2]]
}

impl SimplexPolygon {
    pub fn area(&self) -> f64 {
        let pts: Vec<[f64; 2]> = self.vertices.iter().map(barycentric_to_plane).collect();
        let n = pts.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            .abs()
    }

    /// Smallest barycentric coordinate over the hull; zero when it touches the triangle.
    pub fn min_coordinate(&self) -> f64 {
        self.beta.entries().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether every vertex of `self` lies in the hull of `other`.
    pub fn contained_in(&self, other: &SimplexPolygon) -> bool {
        self.vertices.iter().all(|v| {
            let p = ProbabilityVector::new(v.to_vec()).expect("vertices are permutations of a probability vector");
            polytope_violation(&p, &other.beta) <= MAJORIZATION_TOL
        })
    }
}

/// Polygons `S(β^(t))` for `k = 3`, one per `t`.
pub fn simplex_figure_data(t_values: &[f64], resolution: usize) -> Result<Vec<SimplexPolygon>> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be at least 1".into()));
    }
    t_values
        .iter()
        .map(|&t| {
            let beta = beta_vector(3, t)?;
            let b = beta.entries();
            let center = [1.0 / 3.0; 3];
            let mut vertices: Vec<[f64; 3]> = permutations(3).iter().map(|p| [b[p[0]], b[p[1]], b[p[2]]]).collect();
            let angle = |v: &[f64; 3]| {
                let p = barycentric_to_plane(v);
                let c = barycentric_to_plane(&center);
                (p[1] - c[1]).atan2(p[0] - c[0])
            };
            vertices.sort_by(|u, v| angle(u).total_cmp(&angle(v)));
            let mut points = Vec::with_capacity(6 * resolution + 1);
            for i in 0..6 {
                let (u, v) = (vertices[i], vertices[(i + 1) % 6]);
                for s in 0..resolution {
                    let f = s as f64 / resolution as f64;
                    let q = [u[0] + f * (v[0] - u[0]), u[1] + f * (v[1] - u[1]), u[2] + f * (v[2] - u[2])];
                    points.push(barycentric_to_plane(&q));
                }
            }
            points.push(barycentric_to_plane(&vertices[0]));
            Ok(SimplexPolygon { t, beta, vertices, points })
        })
        .collect()
}
