//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of at most a few dozen rows: the 4×4
//! effective Hamiltonian, 4×4 density matrices and the 16×16 secular
//! Liouvillian. Both decompositions are Jacobi methods, which keep blocks
//! that are exactly decoupled from ever mixing and give accurate small
//! eigenvalues and singular values for graded matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

const MAX_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| C64::new(values[i * cols + j], 0.0))
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add_scaled_assign(&mut self, rhs: &Self, s: C64) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b * s;
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut err: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Row-major vectorization: entry `(i, j)` lands at `i * cols + j`.
    pub fn to_vec(&self) -> Vec<C64> {
        self.data.clone()
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Parameters of the unitary `V = diag(1, e^{-iφ}) · [[c, s], [-s, c]]`
/// acting on a coordinate pair `(p, q)`.
#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    phase: C64,
}

impl Rotation {
    /// Rotation that diagonalizes the Hermitian block `[[a, b], [b*, d]]`.
    fn annihilating(a: f64, d: f64, b: C64) -> Self {
        let mag = b.norm();
        let phase = b.conj() / mag; // e^{-iφ}
        let zeta = (d - a) / (2.0 * mag);
        let t = if zeta >= 0.0 {
            1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
        } else {
            -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
        };
        let c = 1.0 / libm::sqrt(1.0 + t * t);
        Self { c, s: t * c, phase }
    }

    /// `M ← M V` on columns `p`, `q`.
    fn apply_right(&self, m: &mut CMatrix, p: usize, q: usize) {
        for k in 0..m.rows() {
            let mp = m[(k, p)];
            let mq = m[(k, q)] * self.phase;
            m[(k, p)] = mp * self.c - mq * self.s;
            m[(k, q)] = mp * self.s + mq * self.c;
        }
    }

    /// `M ← V† M` on rows `p`, `q`.
    fn apply_left_adjoint(&self, m: &mut CMatrix, p: usize, q: usize) {
        let ph = self.phase.conj();
        for k in 0..m.cols() {
            let mp = m[(p, k)];
            let mq = m[(q, k)] * ph;
            m[(p, k)] = mp * self.c - mq * self.s;
            m[(q, k)] = mp * self.s + mq * self.c;
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: CMatrix,
}

/// Cyclic complex Jacobi diagonalization.
pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::Precondition("eigen-decomposition needs a square matrix".into()));
    }
    let n = h.rows();
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    if h.hermiticity_error() > 1e-10 * scale {
        return Err(Error::Precondition("matrix is not Hermitian".into()));
    }
    let mut a = h.clone();
    let mut v = CMatrix::identity(n);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if libm::sqrt(off) <= 1e-300 {
            converged = true;
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip entries that no longer move the diagonal in f64.
                if b.norm() <= f64::EPSILON * 1e-3 * (libm::fabs(app) + libm::fabs(aqq))
                    || b.norm() < 1e-300
                {
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                let rot = Rotation::annihilating(app, aqq, b);
                rot.apply_right(&mut a, p, q);
                rot.apply_left_adjoint(&mut a, p, q);
                rot.apply_right(&mut v, p, q);
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi eigenvalue sweeps".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Singular values and right singular vectors of a square matrix.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Singular values in ascending order.
    pub values: Vec<f64>,
    /// Right singular vectors as columns, matching `values`.
    pub right: CMatrix,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns whose row supports are disjoint are exactly orthogonal and are
/// never rotated into each other, so block-diagonal structure is preserved
/// to the last bit.
pub fn jacobi_svd(m: &CMatrix) -> Result<Svd> {
    let n = m.cols();
    let mut u = m.clone();
    let mut v = CMatrix::identity(n);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for k in 0..u.rows() {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                if gamma.norm() <= 1e-15 * libm::sqrt(alpha * beta) || gamma.norm() < 1e-300 {
                    continue;
                }
                let rot = Rotation::annihilating(alpha, beta, gamma);
                rot.apply_right(&mut u, p, q);
                rot.apply_right(&mut v, p, q);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("one-sided Jacobi SVD sweeps".into()));
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| libm::sqrt((0..u.rows()).map(|k| u[(k, j)].norm_sqr()).sum()))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]));
    Ok(Svd {
        values: order.iter().map(|&i| norms[i]).collect(),
        right: CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    })
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square());
    let n = a.rows();
    // 1-norm bound
    let norm = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > 0.25 {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let scaled = a.scale(C64::new(libm::ldexp(1.0, -(squarings as i32)), 0.0));
    // ‖A‖ ≤ 1/4: 20 terms leave a remainder far below f64 resolution.
    // Work with X = exp(A) − I so that entries near the identity keep their
    // relative precision through the squarings: (I + X)² − I = 2X + X².
    let mut x = CMatrix::zeros(n, n);
    let mut term = CMatrix::identity(n);
    for k in 1..=20 {
        term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        x = x.add(&term);
    }
    for _ in 0..squarings {
        let sq = x.matmul(&x);
        x = x.scale(C64::new(2.0, 0.0)).add(&sq);
    }
    x.add(&CMatrix::identity(n))
}
