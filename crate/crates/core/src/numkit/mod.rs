//! Small dense linear algebra shared by every other module.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; the dimension is whatever the
//! slice length is. [`SymMat`] is a dense symmetric matrix that keeps its two
//! triangles bit-identical. [`Ldlt`] factors without pivoting, so exact zeros
//! in block-structured matrices stay exact zeros in solves.

mod cg;
mod span;

pub use cg::conjugate_gradient;
pub use span::{span_contains, span_insert, SpanBasis, DEFAULT_SPAN_TOL};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots smaller than this in magnitude are treated as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// Standard unit vector with a one at zero-based `index`.
pub fn unit(dim: usize, index: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[index] = 1.0;
    e
}

/// One-based index of the last entry with magnitude above `threshold`, or 0.
pub fn support_max(x: &[f64], threshold: f64) -> usize {
    x.iter()
        .rposition(|v| v.abs() > threshold)
        .map_or(0, |i| i + 1)
}

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = *v;
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)` (i <= j) and mirrors it.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Takes the upper triangle of `rows`; the lower triangle is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::bad("matrix rows must form a square array"));
        }
        Ok(Self::from_upper_fn(dim, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn scale(&self, a: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &SymMat, b: f64) -> SymMat {
        assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn add_diag(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.dim);
        for (i, v) in diag.iter().enumerate() {
            self.data[i * self.dim + i] += v;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMat::from_rows(&rows)
    }
}

impl From<SymMat> for Vec<Vec<f64>> {
    fn from(m: SymMat) -> Self {
        m.rows()
    }
}

/// `A = L D Lᵀ` with unit lower-triangular `L`, computed without pivoting.
#[derive(Debug, Clone)]
pub struct Ldlt {
    dim: usize,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl Ldlt {
    pub fn factor(a: &SymMat) -> Result<Self> {
        let n = a.dim();
        let mut lower = vec![0.0; n * n];
        let mut diag = vec![0.0; n];
        for j in 0..n {
            let mut dj = a.get(j, j);
            for k in 0..j {
                let l = lower[j * n + k];
                if l != 0.0 {
                    dj -= l * l * diag[k];
                }
            }
            if !(dj.abs() > PIVOT_THRESHOLD) {
                return Err(Error::SingularMatrix { index: j, pivot: dj });
            }
            diag[j] = dj;
            for i in j + 1..n {
                let mut v = a.get(i, j);
                for k in 0..j {
                    let (lik, ljk) = (lower[i * n + k], lower[j * n + k]);
                    if lik != 0.0 && ljk != 0.0 {
                        v -= lik * ljk * diag[k];
                    }
                }
                lower[i * n + j] = v / dj;
            }
        }
        Ok(Ldlt {
            dim: n,
            lower,
            diag,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                let l = self.lower[i * n + k];
                if l != 0.0 {
                    v -= l * x[k];
                }
            }
            x[i] = v;
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= d;
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in i + 1..n {
                let l = self.lower[k * n + i];
                if l != 0.0 {
                    v -= l * x[k];
                }
            }
            x[i] = v;
        }
        x
    }
}

/// Solves `A x = b` for symmetric nonsingular `A`.
pub fn symmetric_solve(a: &SymMat, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Ldlt::factor(a)?.solve(b))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn spectral_bounds(a: &SymMat) -> Result<(f64, f64)> {
    let n = a.dim();
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let cap = 10 * n * n;
    let eig = SymmetricEigen::try_new(a.to_nalgebra(), f64::EPSILON, cap)
        .ok_or(Error::NoConvergence { iterations: cap })?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Spectral norm of a symmetric matrix (largest eigenvalue magnitude).
pub fn spectral_norm(a: &SymMat) -> Result<f64> {
    let (lo, hi) = spectral_bounds(a)?;
    Ok(lo.abs().max(hi.abs()))
}
