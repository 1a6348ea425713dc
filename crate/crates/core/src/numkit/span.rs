use super::{axpy, dot, norm, support_max};

/// Relative tolerance used for span membership throughout the crate.
pub const DEFAULT_SPAN_TOL: f64 = 1e-9;

/// Relative residual above which an inserted vector extends the basis.
/// Much tighter than the membership tolerance, so that components dropped at
/// insertion cannot accumulate into a membership failure over long runs.
pub const INSERT_TOL: f64 = 1e-14;

/// Orthonormal basis of a growing subspace of ℝ^d.
///
/// Columns are produced by classical Gram-Schmidt with one reorthogonalization
/// pass. Coordinates that are exactly zero in every inserted vector stay
/// exactly zero in every column.
///
/// When the span is exactly a coordinate subspace `E_s` (rank equals the
/// largest exactly-nonzero coordinate), projections reduce to zeroing the
/// first `s` coordinates, which keeps long structured runs linear in `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanBasis {
    dim: usize,
    tol: f64,
    columns: Vec<Vec<f64>>,
    /// One-based largest coordinate that is exactly nonzero in some column.
    exact_support: usize,
}

impl SpanBasis {
    pub fn new(dim: usize) -> Self {
        Self::with_tolerance(dim, DEFAULT_SPAN_TOL)
    }

    pub fn with_tolerance(dim: usize, tol: f64) -> Self {
        SpanBasis {
            dim,
            tol,
            columns: Vec::new(),
            exact_support: 0,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the spanned subspace.
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    fn is_coordinate(&self) -> bool {
        self.columns.len() == self.exact_support
    }

    fn residual(&self, v: &[f64]) -> Vec<f64> {
        if self.is_coordinate() {
            let mut r = v.to_vec();
            r[..self.exact_support].iter_mut().for_each(|x| *x = 0.0);
            return r;
        }
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in &self.columns {
                let c = dot(q, &r);
                if c != 0.0 {
                    axpy(-c, q, &mut r);
                }
            }
        }
        r
    }

    /// Adds `v` to the span. Returns `true` when the basis grew.
    pub fn insert(&mut self, v: &[f64]) -> bool {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        debug_assert!(v.iter().all(|x| x.is_finite()), "non-finite vector");
        let vn = norm(v);
        if vn == 0.0 || self.columns.len() == self.dim {
            return false;
        }
        let mut r = self.residual(v);
        let rn = norm(&r);
        if rn > self.tol.min(INSERT_TOL) * vn {
            r.iter_mut().for_each(|x| *x /= rn);
            self.exact_support = self.exact_support.max(support_max(&r, 0.0));
            self.columns.push(r);
            true
        } else {
            false
        }
    }

    /// Membership test: projection residual at most `tol * max(1, ‖v‖)`.
    pub fn contains(&self, v: &[f64]) -> bool {
        let vn = norm(v);
        if vn == 0.0 {
            return true;
        }
        norm(&self.residual(v)) <= self.tol * vn.max(1.0)
    }

    /// Inserts every column of `other`; returns how many columns were added.
    pub fn absorb(&mut self, other: &[Vec<f64>]) -> usize {
        other.iter().filter(|v| self.insert(v)).count()
    }

    /// Largest one-based coordinate with magnitude above `threshold` in any column.
    pub fn support_max(&self, threshold: f64) -> usize {
        self.columns
            .iter()
            .map(|q| support_max(q, threshold))
            .max()
            .unwrap_or(0)
    }
}

/// Free-function form of [`SpanBasis::insert`].
pub fn span_insert(basis: &mut SpanBasis, v: &[f64]) -> bool {
    basis.insert(v)
}

/// Free-function form of [`SpanBasis::contains`].
pub fn span_contains(basis: &SpanBasis, v: &[f64]) -> bool {
    basis.contains(v)
}
