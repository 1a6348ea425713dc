//! Hard instance families, their exact optima, and structural validators.
//!
//! Every family assigns `F₁` to the first `m/2` machines and `F₂` to the
//! rest, so the designated output machine `m − 1` always holds `F₂`.

mod nonsmooth;
mod one_round;
mod smooth;
mod validate;

pub use nonsmooth::{
    build_nonsmooth_hard_pair, chain_weights, default_b, nonsmooth_pair_optimum, one_dim_reduction_min, AbsTerm,
    PiecewiseAbsLocal, TermKind, TieRule,
};
pub(crate) use one_round::delta_dominates;
pub use one_round::{
    build_one_round_pair, one_round_pair_from_matrix, sample_sign_matrix, SignMatrixSample,
    ONE_ROUND_NORM_CONSTANT,
};
pub use smooth::{build_smooth_hard_pair, smooth_pair_optimum, zeta, SmoothOptimum};
pub use validate::{check_delta_related, delta_gaps, validate_bundle, Check};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{dot, norm, symmetric_solve, Ldlt, SymMat};

/// `F(w) = wᵀAw + bᵀw + c`, so the Hessian is `2A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticLocal {
    pub a: SymMat,
    pub b: Vec<f64>,
    pub c: f64,
    /// Certified lower bound on the Hessian spectrum.
    pub certified_lambda: f64,
    /// Certified upper bound on the Hessian spectrum.
    pub certified_smooth: f64,
}

impl QuadraticLocal {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        self.a.quad_form(w) + dot(&self.b, w) + self.c
    }

    pub fn grad(&self, w: &[f64]) -> Vec<f64> {
        let mut g = self.a.matvec(w);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi = 2.0 * *gi + bi;
        }
        g
    }

    pub fn hessian(&self) -> SymMat {
        self.a.scale(2.0)
    }

    fn shifted_hessian(&self, shift: &[f64]) -> SymMat {
        let mut h = self.hessian();
        h.add_diag(shift);
        h
    }

    /// `(∇²F + D) v`
    pub fn hessian_shift_apply(&self, shift: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = self.a.matvec(v);
        for ((o, s), vi) in out.iter_mut().zip(shift).zip(v) {
            *o = 2.0 * *o + s * vi;
        }
        out
    }

    /// Factorization of `∇²F + D`, reusable across solves.
    pub fn shifted_factor(&self, shift: &[f64]) -> Result<Ldlt> {
        Ldlt::factor(&self.shifted_hessian(shift)).map_err(|_| Error::SingularShift)
    }

    /// `(∇²F + D)⁻¹ v`
    pub fn hessian_shift_solve(&self, shift: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.shifted_factor(shift)?.solve(v))
    }

    /// Unique `w` with `γw + ν∇F(w) = r`.
    pub fn local_solve(&self, gamma: f64, nu: f64, r: &[f64]) -> Result<Vec<f64>> {
        if nu == 0.0 {
            return Ok(r.iter().map(|v| v / gamma).collect());
        }
        let mut h = self.a.scale(2.0 * nu);
        h.add_diag(&vec![gamma; self.dim()]);
        let rhs: Vec<f64> = r.iter().zip(&self.b).map(|(ri, bi)| ri - nu * bi).collect();
        symmetric_solve(&h, &rhs).map_err(|_| Error::SingularShift)
    }
}

/// One machine's local objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalFunction {
    Quadratic(QuadraticLocal),
    PiecewiseAbs(PiecewiseAbsLocal),
}

impl LocalFunction {
    pub fn dim(&self) -> usize {
        match self {
            LocalFunction::Quadratic(q) => q.dim(),
            LocalFunction::PiecewiseAbs(p) => p.dim,
        }
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            LocalFunction::Quadratic(q) => q.eval(w),
            LocalFunction::PiecewiseAbs(p) => p.eval(w),
        }
    }

    /// Gradient, or the tie-rule subgradient for piecewise functions.
    pub fn first_order(&self, w: &[f64], tie: TieRule) -> Vec<f64> {
        match self {
            LocalFunction::Quadratic(q) => q.grad(w),
            LocalFunction::PiecewiseAbs(p) => p.subgrad(w, tie),
        }
    }

    pub fn hessian_shift_apply(&self, shift: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            LocalFunction::Quadratic(q) => q.hessian_shift_apply(shift, v),
            LocalFunction::PiecewiseAbs(p) => p.hessian_shift_apply(shift, v),
        }
    }

    pub fn hessian_shift_solve(&self, shift: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match self {
            LocalFunction::Quadratic(q) => q.hessian_shift_solve(shift, v),
            LocalFunction::PiecewiseAbs(p) => p.hessian_shift_solve(shift, v),
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticLocal> {
        match self {
            LocalFunction::Quadratic(q) => Some(q),
            LocalFunction::PiecewiseAbs(_) => None,
        }
    }

    pub fn as_piecewise(&self) -> Option<&PiecewiseAbsLocal> {
        match self {
            LocalFunction::PiecewiseAbs(p) => Some(p),
            LocalFunction::Quadratic(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Block-tridiagonal smooth quadratics.
    Smooth,
    /// Weighted absolute differences plus a ridge.
    Nonsmooth,
    /// Random sign-matrix quadratics for single-round algorithms.
    OneRound,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Smooth => "smooth",
            Family::Nonsmooth => "nonsmooth",
            Family::OneRound => "one_round",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    #[serde(default)]
    pub delta: f64,
    pub lambda: f64,
    pub d: usize,
    pub m: usize,
    /// Round budget the non-smooth instance is built against (`k = T + 2`).
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// One-based coordinate of the one-round linear term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// `m` local functions together with the exact optimum of their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceBundle {
    pub family: Family,
    pub params: InstanceParams,
    #[serde(default)]
    pub seed: Option<u64>,
    pub locals: Vec<LocalFunction>,
    pub optimum: Vec<f64>,
    pub optimum_value: f64,
}

impl InstanceBundle {
    pub fn m(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.optimum.len()
    }

    /// Index of the machine that produces the output.
    pub fn designated(&self) -> usize {
        self.m() - 1
    }

    /// Average objective `F = (1/m) Σ F_j`.
    pub fn eval(&self, w: &[f64]) -> f64 {
        self.locals.iter().map(|f| f.eval(w)).sum::<f64>() / self.m() as f64
    }

    pub fn suboptimality(&self, w: &[f64]) -> f64 {
        self.eval(w) - self.optimum_value
    }

    /// Average gradient (tie-rule subgradient for piecewise locals).
    pub fn first_order(&self, w: &[f64], tie: TieRule) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for f in &self.locals {
            for (gi, v) in g.iter_mut().zip(f.first_order(w, tie)) {
                *gi += v;
            }
        }
        let m = self.m() as f64;
        g.iter_mut().for_each(|v| *v /= m);
        g
    }

    pub fn is_quadratic(&self) -> bool {
        self.locals
            .iter()
            .all(|f| matches!(f, LocalFunction::Quadratic(_)))
    }

    /// Hessian of the average for quadratic bundles.
    pub fn average_hessian(&self) -> Result<SymMat> {
        let mut acc = SymMat::zeros(self.dim());
        let w = 1.0 / self.m() as f64;
        for f in &self.locals {
            let q = f.as_quadratic().ok_or(Error::NotQuadratic)?;
            acc = acc.combine(1.0, &q.a, 2.0 * w);
        }
        Ok(acc)
    }

    /// Largest certified smoothness constant over the locals.
    pub fn certified_smooth(&self) -> f64 {
        self.locals
            .iter()
            .map(|f| match f {
                LocalFunction::Quadratic(q) => q.certified_smooth,
                LocalFunction::PiecewiseAbs(p) => p.ridge,
            })
            .fold(0.0, f64::max)
    }

    /// Smallest certified strong-convexity constant over the locals.
    pub fn certified_lambda(&self) -> f64 {
        self.locals
            .iter()
            .map(|f| match f {
                LocalFunction::Quadratic(q) => q.certified_lambda,
                LocalFunction::PiecewiseAbs(p) => p.ridge,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Norm of the average gradient at the stored optimum (quadratic bundles).
    pub fn optimum_residual(&self) -> Result<f64> {
        if !self.is_quadratic() {
            return Err(Error::NotQuadratic);
        }
        Ok(norm(&self.first_order(&self.optimum, TieRule::MIDPOINT)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Assigns `f1` to the first `m/2` machines and `f2` to the rest.
pub(crate) fn split_assignment(m: usize, f1: LocalFunction, f2: LocalFunction) -> Vec<LocalFunction> {
    (0..m)
        .map(|i| if i < m / 2 { f1.clone() } else { f2.clone() })
        .collect()
}

pub(crate) fn check_even_m(m: usize) -> Result<()> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::bad(format!("machine count m={m} must be even and positive")));
    }
    Ok(())
}
