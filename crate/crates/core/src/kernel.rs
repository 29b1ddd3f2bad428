//! Dense complex linear algebra shared by the simulation and optimization code.
//!
//! Tensor products follow one fixed convention everywhere: the basis vector
//! `e_a ⊗ f_b` of `C^n ⊗ C^k` sits at flat index `a * k + b`.

use std::ops::Index;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::prob::ProbabilityVector;

pub type C64 = Complex64;

const HERMITIAN_REL_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const NORMALIZATION_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-10;

/// Dense complex matrix.
///
/// Storage is delegated to `nalgebra`; the public constructors and
/// [`ComplexMatrix::to_row_major`] speak row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension("matrix must have positive dimensions".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&d))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Rank-one projector `x x†` (not normalized).
    pub fn outer(x: &[C64]) -> Self {
        let n = x.len();
        Self(DMatrix::from_fn(n, n, |i, j| x[i] * x[j].conj()))
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::InvalidDimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self(&self.0 * &other.0))
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols() {
            return Err(Error::InvalidDimension(format!(
                "vector of length {} for a matrix with {} columns",
                x.len(),
                self.cols()
            )));
        }
        let v = DVector::from_column_slice(x);
        Ok((&self.0 * v).iter().copied().collect())
    }

    /// `self† x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.rows() {
            return Err(Error::InvalidDimension(format!(
                "vector of length {} for a matrix with {} rows",
                x.len(),
                self.rows()
            )));
        }
        let v = DVector::from_column_slice(x);
        Ok(self.0.ad_mul(&v).iter().copied().collect())
    }

    pub fn trace(&self) -> C64 {
        self.0.diagonal().iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs();
        let n = self.rows();
        for i in 0..n {
            for j in i..n {
                if (self.0[(i, j)] - self.0[(j, i)].conj()).norm() > HERMITIAN_REL_TOL * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `max |U†U - I| <= 1e-10`; for non-square input this tests for an isometry.
    pub fn is_isometry(&self) -> bool {
        let gram = self.0.ad_mul(&self.0);
        let n = gram.nrows();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                (gram[(i, j)] - target).norm() <= UNITARY_TOL
            })
        })
    }

    pub fn is_unitary(&self) -> bool {
        self.is_square() && self.is_isometry()
    }

    /// Replaces the matrix by `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// Seeded, counter-based random stream keyed by `(seed, stream_id)`.
///
/// Distinct stream ids select disjoint ChaCha streams for the same key, so
/// every trial can own its generator regardless of scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Standard complex Gaussian: `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn complex_normal_vec(&mut self, len: usize) -> Vec<C64> {
        (0..len).map(|_| self.complex_normal()).collect()
    }

    /// Uniformly distributed point of the unit sphere of `C^dim`.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<C64> {
        loop {
            let mut v = self.complex_normal_vec(dim);
            let norm = vec_norm(&v);
            if norm > 0.0 {
                v.iter_mut().for_each(|z| *z /= norm);
                return v;
            }
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform point of the probability simplex with `len` entries.
    pub fn simplex_point(&mut self, len: usize) -> ProbabilityVector {
        let e: Vec<f64> = (0..len).map(|_| -(1.0 - self.uniform()).ln()).collect();
        ProbabilityVector::normalized(e).expect("exponential draws have positive mass")
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<x, y>` with the conjugate on the left argument.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn check_normalized(x: &[C64]) -> Result<()> {
    let norm = vec_norm(x);
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

fn require_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidMatrix(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    if !m.is_hermitian() {
        return Err(Error::InvalidMatrix("matrix is not Hermitian".into()));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix in nonincreasing order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    require_hermitian(m)?;
    Ok(eigenvalues_unchecked(m))
}

pub(crate) fn eigenvalues_unchecked(m: &ComplexMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m.0.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues come in nonincreasing order; column `i` of the returned
/// matrix is a unit eigenvector for eigenvalue `i`. Ties keep the order the
/// underlying solver produced, which is deterministic for a given input.
pub fn hermitian_eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    require_hermitian(m)?;
    Ok(eigh_unchecked(m))
}

pub(crate) fn eigh_unchecked(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.rows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, ComplexMatrix(vecs))
}

/// Largest eigenvalue of a positive semidefinite Hermitian matrix.
pub fn psd_operator_norm(m: &ComplexMatrix) -> Result<f64> {
    let vals = hermitian_eigenvalues(m)?;
    let scale = m.max_abs().max(1.0);
    if let Some(&min) = vals.last() {
        if min < -PSD_TOL * scale {
            return Err(Error::InvalidMatrix(format!("matrix has negative eigenvalue {min}")));
        }
    }
    Ok(vals.first().copied().unwrap_or(0.0).max(0.0))
}

/// Haar-distributed `rows x cols` isometry (`cols <= rows`).
///
/// QR of a complex Ginibre matrix with the phases of `R`'s diagonal pushed
/// into `Q`, so that the implied `R` has a positive diagonal. The result has
/// the law of the first `cols` columns of a Haar unitary of size `rows`.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension("Haar sampling needs positive dimensions".into()));
    }
    if cols > rows {
        return Err(Error::InvalidDimension(format!("isometry {rows}x{cols} has more columns than rows")));
    }
    let g = DMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| rng.complex_normal()));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    Ok(ComplexMatrix(q))
}

/// Haar-distributed unitary of size `dim`.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    haar_isometry(dim, dim, rng)
}

/// `Tr_n` of an operator on `C^n ⊗ C^k`, giving a `k x k` matrix.
pub fn partial_trace_left(m: &ComplexMatrix, n: usize, k: usize) -> Result<ComplexMatrix> {
    if n == 0 || k == 0 || m.rows() != n * k || m.cols() != n * k {
        return Err(Error::InvalidDimension(format!(
            "{}x{} matrix is not an operator on C^{n} ⊗ C^{k}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(ComplexMatrix::from_fn(k, k, |b, c| (0..n).map(|a| m[(a * k + b, a * k + c)]).sum()))
}

/// Reduced density `Tr_n |x><x|` of a vector in `C^n ⊗ C^k`, computed from the
/// `n x k` reshaping `Y` of `x` as `Yᵀ conj(Y)`.
pub fn reduced_density(x: &[C64], n: usize, k: usize) -> Result<ComplexMatrix> {
    if n == 0 || k == 0 || x.len() != n * k {
        return Err(Error::InvalidDimension(format!("vector of length {} is not in C^{n} ⊗ C^{k}", x.len())));
    }
    let mut rho = DMatrix::<C64>::zeros(k, k);
    for a in 0..n {
        let row = &x[a * k..(a + 1) * k];
        for b in 0..k {
            for c in b..k {
                rho[(b, c)] += row[b] * row[c].conj();
            }
        }
    }
    for b in 0..k {
        rho[(b, b)].im = 0.0;
        for c in 0..b {
            rho[(b, c)] = rho[(c, b)].conj();
        }
    }
    Ok(ComplexMatrix(rho))
}

/// Squared Schmidt coefficients of a unit vector of `C^n ⊗ C^k`, in nonincreasing order.
pub fn schmidt_spectrum(x: &[C64], n: usize, k: usize) -> Result<ProbabilityVector> {
    check_normalized(x)?;
    let rho = reduced_density(x, n, k)?;
    spectrum_of_density(&rho)
}

/// Spectrum of a density matrix whose trace may be off by rounding.
pub(crate) fn spectrum_of_density(rho: &ComplexMatrix) -> Result<ProbabilityVector> {
    let vals = eigenvalues_unchecked(rho);
    let tr: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    ProbabilityVector::new(vals.into_iter().map(|v| if v < 0.0 { v } else { v / tr }).collect())
}

/// Largest eigenpair of a Hermitian operator given by its action, via Lanczos
/// with full reorthogonalization, restarted from the current Ritz vector.
///
/// Starting from `start`, the returned eigenvalue is never below the Rayleigh
/// quotient of `start`.
pub fn lanczos_top<F>(dim: usize, apply: F, start: &[C64], tol: f64, max_restarts: usize) -> (f64, Vec<C64>)
where
    F: Fn(&[C64], &mut [C64]),
{
    lanczos_top_with(dim, 48, apply, start, tol, max_restarts)
}

/// [`lanczos_top`] with Krylov subspaces of dimension at most `krylov`.
pub fn lanczos_top_with<F>(dim: usize, krylov: usize, apply: F, start: &[C64], tol: f64, max_restarts: usize) -> (f64, Vec<C64>)
where
    F: Fn(&[C64], &mut [C64]),
{
    let krylov = dim.min(krylov.max(2));
    let mut v0: Vec<C64> = start.to_vec();
    let n0 = vec_norm(&v0);
    v0.iter_mut().for_each(|z| *z /= n0);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut best = (f64::NEG_INFINITY, v0.clone());

    for _ in 0..max_restarts.max(1) {
        let mut basis: Vec<Vec<C64>> = vec![v0.clone()];
        let mut alphas = Vec::with_capacity(krylov);
        let mut betas: Vec<f64> = Vec::with_capacity(krylov);
        loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            let alpha = inner(&basis[j], &w).re;
            alphas.push(alpha);
            // Full reorthogonalization, twice for stability.
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let beta = vec_norm(&w);
            if basis.len() >= krylov || beta <= 1e-13 * alpha.abs().max(1.0) {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|z| z / beta).collect());
        }
        let m = alphas.len();
        let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imax, _) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let mut ritz = vec![C64::new(0.0, 0.0); dim];
        for (q, &s) in basis.iter().zip(eig.eigenvectors.column(imax).iter()) {
            ritz.iter_mut().zip(q).for_each(|(r, qi)| *r += qi * s);
        }
        let rn = vec_norm(&ritz);
        ritz.iter_mut().for_each(|z| *z /= rn);
        apply(&ritz, &mut w);
        let rq = inner(&ritz, &w).re;
        let resid = w
            .iter()
            .zip(&ritz)
            .map(|(a, b)| (a - b * rq).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if rq > best.0 {
            best = (rq, ritz.clone());
        }
        if resid <= tol * rq.abs().max(1.0) || m < krylov {
            break;
        }
        v0 = ritz;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut RngStream) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
        g.hermitian_part()
    }

    fn random_density(dim: usize, rank: usize, rng: &mut RngStream) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(dim, rank, |_, _| rng.complex_normal());
        let m = g.matmul(&g.adjoint()).unwrap();
        let tr = m.trace().re;
        ComplexMatrix::from_dmatrix(m.into_dmatrix() / c(tr, 0.0)).hermitian_part()
    }

    #[test]
    fn identity_eigenvalues() {
        assert_eq!(hermitian_eigenvalues(&ComplexMatrix::identity(5)).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let vals = hermitian_eigenvalues(&ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn two_by_two_matches_quadratic_formula() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..50 {
            let a = rng.uniform() * 4.0 - 2.0;
            let d = rng.uniform() * 4.0 - 2.0;
            let b = rng.complex_normal();
            let m = ComplexMatrix::from_row_major(2, 2, vec![c(a, 0.0), b, b.conj(), c(d, 0.0)]).unwrap();
            // roots of λ² - (a+d)λ + (ad - |b|²)
            let mean = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            let vals = hermitian_eigenvalues(&m).unwrap();
            assert!((vals[0] - (mean + disc)).abs() <= 1e-10);
            assert!((vals[1] - (mean - disc)).abs() <= 1e-10);
        }
    }

    #[test]
    fn eigenvalue_trace_and_hs_identities() {
        let mut rng = RngStream::new(12, 0);
        for n in [3, 10, 40] {
            let m = random_hermitian(n, &mut rng);
            let vals = hermitian_eigenvalues(&m).unwrap();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]));
            let s1: f64 = vals.iter().sum();
            let s2: f64 = vals.iter().map(|v| v * v).sum();
            assert!((s1 - m.trace().re).abs() <= 1e-9 * m.frobenius_norm_sq().sqrt().max(1.0));
            assert!((s2 - m.frobenius_norm_sq()).abs() <= 1e-9 * m.frobenius_norm_sq());
        }
    }

    #[test]
    fn eigh_vectors_diagonalize() {
        let mut rng = RngStream::new(13, 0);
        let m = random_hermitian(12, &mut rng);
        let (vals, vecs) = hermitian_eigh(&m).unwrap();
        let recon = vecs
            .matmul(&ComplexMatrix::from_real_diagonal(&vals))
            .unwrap()
            .matmul(&vecs.adjoint())
            .unwrap();
        assert!(recon.max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::InvalidMatrix(_))));
        assert!(matches!(hermitian_eigenvalues(&ComplexMatrix::zeros(2, 3)), Err(Error::InvalidMatrix(_))));
        assert!(matches!(psd_operator_norm(&m), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn haar_dim_one_is_a_phase() {
        let mut rng = RngStream::new(1, 0);
        let u = haar_unitary(1, &mut rng).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = RngStream::new(2, 0);
        for dim in [2, 7, 64] {
            assert!(haar_unitary(dim, &mut rng).unwrap().is_unitary());
        }
        assert!(matches!(haar_unitary(0, &mut rng), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn haar_isometry_is_prefix_of_unitary() {
        let u = haar_unitary(9, &mut RngStream::new(3, 4)).unwrap();
        let w = haar_isometry(9, 4, &mut RngStream::new(3, 4)).unwrap();
        for j in 0..4 {
            for i in 0..9 {
                assert!((u[(i, j)] - w[(i, j)]).norm() < 1e-12);
            }
        }
        assert!(w.is_isometry());
    }

    #[test]
    fn haar_first_moment() {
        // E|U_11|^2 = 1/dim
        let dim = 50;
        let trials = 2000;
        let mut rng = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..trials).map(|_| haar_unitary(dim, &mut rng).unwrap()[(0, 0)].norm_sqr()).collect();
        let mean = xs.iter().sum::<f64>() / trials as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - 1.0 / dim as f64).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn same_stream_reproduces_bits() {
        let a = haar_unitary(6, &mut RngStream::new(99, 3)).unwrap();
        let b = haar_unitary(6, &mut RngStream::new(99, 3)).unwrap();
        assert_eq!(a, b);
        let c = haar_unitary(6, &mut RngStream::new(99, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn partial_trace_product_state() {
        let (n, k) = (3, 2);
        let mut x = vec![c(0.0, 0.0); n * k];
        x[0] = c(1.0, 0.0);
        let pt = partial_trace_left(&ComplexMatrix::outer(&x), n, k).unwrap();
        assert_eq!(pt, ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let pt = partial_trace_left(&ComplexMatrix::outer(&x), 2, 2).unwrap();
        assert!(pt.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let (n, k) = (3, 2);
        let mut rng = RngStream::new(21, 0);
        let rho = random_density(n * k, 4, &mut rng);
        let got = partial_trace_left(&rho, n, k).unwrap();
        // oracle: explicit four-index contraction
        let flat = rho.to_row_major();
        for b in 0..k {
            for bp in 0..k {
                let mut acc = c(0.0, 0.0);
                for a in 0..n {
                    for ap in 0..n {
                        if a == ap {
                            acc += flat[(a * k + b) * (n * k) + (ap * k + bp)];
                        }
                    }
                }
                assert!((acc - got[(b, bp)]).norm() <= 1e-12);
            }
        }
        assert!(matches!(partial_trace_left(&rho, 2, 2), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity() {
        let mut rng = RngStream::new(22, 0);
        for _ in 0..100 {
            let rho = random_density(12, 3, &mut rng);
            let pt = partial_trace_left(&rho, 4, 3).unwrap();
            assert!((pt.trace().re - 1.0).abs() < 1e-12);
            assert!(pt.is_hermitian());
            assert!(*hermitian_eigenvalues(&pt).unwrap().last().unwrap() > -1e-12);
        }
    }

    #[test]
    fn schmidt_examples() {
        let mut e = vec![c(0.0, 0.0); 12];
        e[0] = c(1.0, 0.0);
        assert_eq!(schmidt_spectrum(&e, 4, 3).unwrap().entries(), &[1.0, 0.0, 0.0]);

        let (n, k) = (5, 3);
        let mut bell = vec![c(0.0, 0.0); n * k];
        for i in 0..k {
            bell[i * k + i] = c(1.0 / (k as f64).sqrt(), 0.0);
        }
        for v in schmidt_spectrum(&bell, n, k).unwrap().entries() {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }

        let not_unit = vec![c(1.0, 0.0); 4];
        assert!(matches!(schmidt_spectrum(&not_unit, 2, 2), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn schmidt_fast_path_matches_slow_path() {
        let mut rng = RngStream::new(23, 0);
        let (n, k) = (8, 3);
        for _ in 0..100 {
            let x = rng.unit_vector(n * k);
            let fast = schmidt_spectrum(&x, n, k).unwrap();
            let slow = hermitian_eigenvalues(&partial_trace_left(&ComplexMatrix::outer(&x), n, k).unwrap().hermitian_part()).unwrap();
            for (a, b) in fast.entries().iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn psd_norm_examples() {
        assert_eq!(psd_operator_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        let p = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0]);
        assert!((psd_operator_norm(&p).unwrap() - 1.0).abs() < 1e-15);
        let d = ComplexMatrix::from_real_diagonal(&[0.3, 0.84, 0.1]);
        assert!((psd_operator_norm(&d).unwrap() - 0.84).abs() < 1e-15);
    }

    #[test]
    fn lanczos_finds_top_eigenpair() {
        let mut rng = RngStream::new(31, 0);
        let g = ComplexMatrix::from_fn(80, 60, |_, _| rng.complex_normal());
        let m = g.adjoint().matmul(&g).unwrap().hermitian_part();
        let exact = hermitian_eigenvalues(&m).unwrap()[0];
        let start = rng.unit_vector(60);
        let (val, vec) = lanczos_top(
            60,
            |x, out| out.copy_from_slice(&m.mul_vec(x).unwrap()),
            &start,
            1e-10,
            50,
        );
        assert!((val - exact).abs() < 1e-8 * exact);
        assert!((vec_norm(&vec) - 1.0).abs() < 1e-12);
    }
}
