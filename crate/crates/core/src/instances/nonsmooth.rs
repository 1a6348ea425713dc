use serde::{Deserialize, Serialize};

use super::{check_even_m, split_assignment, Family, InstanceBundle, InstanceParams, LocalFunction};
use crate::error::{Error, Result};
use crate::numkit::norm;

/// Which element of `β·[−1, 1]` a kink contributes: `β(2α − 1)`.
///
/// Terms whose coordinates are all exactly zero contribute the zero element
/// regardless of `α`. Without that restriction an adversarial choice can
/// reach coordinates the machine has never seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieRule(f64);

impl TieRule {
    pub const MIDPOINT: TieRule = TieRule(0.5);

    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::bad(format!("tie rule alpha={alpha} outside [0,1]")));
        }
        Ok(TieRule(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    fn kink_coef(self) -> f64 {
        2.0 * self.0 - 1.0
    }
}

impl Default for TieRule {
    fn default() -> Self {
        TieRule::MIDPOINT
    }
}

/// Coordinates are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// `|offset − w[coord]|`
    Boundary { coord: usize, offset: f64 },
    /// `|w[i] − w[j]|`
    Difference { i: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsTerm {
    pub weight: f64,
    pub kind: TermKind,
}

impl AbsTerm {
    fn residual(&self, w: &[f64]) -> f64 {
        match self.kind {
            TermKind::Boundary { coord, offset } => w[coord] - offset,
            TermKind::Difference { i, j } => w[i] - w[j],
        }
    }

    fn coords(&self) -> Vec<usize> {
        match self.kind {
            TermKind::Boundary { coord, .. } => vec![coord],
            TermKind::Difference { i, j } => vec![i, j],
        }
    }

    fn untouched(&self, w: &[f64]) -> bool {
        matches!(self.kind, TermKind::Difference { i, j } if w[i] == 0.0 && w[j] == 0.0)
    }

    /// Adds `coef · ∂r/∂w` to `g`.
    fn scatter(&self, coef: f64, g: &mut [f64]) {
        match self.kind {
            TermKind::Boundary { coord, .. } => g[coord] += coef,
            TermKind::Difference { i, j } => {
                g[i] += coef;
                g[j] -= coef;
            }
        }
    }

    /// Squared norm of `∂r/∂w`.
    fn atom_norm_sq(&self) -> f64 {
        match self.kind {
            TermKind::Boundary { .. } => 1.0,
            TermKind::Difference { .. } => 2.0,
        }
    }
}

/// `scale · Σ weight·|·| + (ridge/2)‖w‖²` on a ball of radius `domain_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAbsLocal {
    pub dim: usize,
    pub terms: Vec<AbsTerm>,
    pub ridge: f64,
    pub scale: f64,
    pub domain_radius: f64,
}

impl PiecewiseAbsLocal {
    fn beta(&self, t: &AbsTerm) -> f64 {
        t.weight * self.scale
    }

    /// Value of the absolute-value part only.
    pub fn abs_value(&self, w: &[f64]) -> f64 {
        self.terms.iter().map(|t| self.beta(t) * t.residual(w).abs()).sum()
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        self.abs_value(w) + 0.5 * self.ridge * w.iter().map(|x| x * x).sum::<f64>()
    }

    /// Subgradient with kinks resolved by `tie`.
    pub fn subgrad(&self, w: &[f64], tie: TieRule) -> Vec<f64> {
        let mut g: Vec<f64> = w.iter().map(|x| self.ridge * x).collect();
        for t in &self.terms {
            let r = t.residual(w);
            let coef = if r > 0.0 {
                self.beta(t)
            } else if r < 0.0 {
                -self.beta(t)
            } else if t.untouched(w) {
                0.0
            } else {
                self.beta(t) * tie.kink_coef()
            };
            if coef != 0.0 {
                t.scatter(coef, &mut g);
            }
        }
        g
    }

    pub fn hessian_shift_apply(&self, shift: &[f64], v: &[f64]) -> Vec<f64> {
        v.iter().zip(shift).map(|(vi, s)| (self.ridge + s) * vi).collect()
    }

    pub fn hessian_shift_solve(&self, shift: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        v.iter()
            .zip(shift)
            .map(|(vi, s)| {
                let h = self.ridge + s;
                if h.abs() <= crate::numkit::PIVOT_THRESHOLD {
                    Err(Error::SingularShift)
                } else {
                    Ok(vi / h)
                }
            })
            .collect()
    }

    /// Terms must touch pairwise disjoint coordinates for the closed-form prox.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = vec![false; self.dim];
        for t in &self.terms {
            for c in t.coords() {
                if c >= self.dim || seen[c] {
                    return Err(Error::bad(format!("term coordinate {c} overlaps or is out of range")));
                }
                seen[c] = true;
            }
        }
        Ok(())
    }

    /// `prox_{t·h}(v)` for the absolute-value part `h`, plus the element of
    /// `∂h(x)` certifying it (`(v − x)/t` computed per term, exact at kinks).
    pub fn prox_abs(&self, v: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut x = v.to_vec();
        let mut g = vec![0.0; self.dim];
        for term in &self.terms {
            let beta = self.beta(term);
            let tb = t * beta;
            match term.kind {
                TermKind::Boundary { coord, offset } => {
                    let r = v[coord] - offset;
                    if r.abs() <= tb {
                        x[coord] = offset;
                        g[coord] = if t > 0.0 { r / t } else { 0.0 };
                    } else {
                        x[coord] = v[coord] - tb * r.signum();
                        g[coord] = beta * r.signum();
                    }
                }
                TermKind::Difference { i, j } => {
                    let r = v[i] - v[j];
                    if r.abs() <= 2.0 * tb {
                        let mid = 0.5 * (v[i] + v[j]);
                        x[i] = mid;
                        x[j] = mid;
                        let theta = if t > 0.0 { 0.5 * r / t } else { 0.0 };
                        g[i] = theta;
                        g[j] = -theta;
                    } else {
                        x[i] = v[i] - tb * r.signum();
                        x[j] = v[j] + tb * r.signum();
                        g[i] = beta * r.signum();
                        g[j] = -beta * r.signum();
                    }
                }
            }
        }
        (x, g)
    }

    /// Unique `w` with `γw + νg = r` for some `g ∈ ∂F(w)`; returns `(w, g)`.
    pub fn local_solve(&self, gamma: f64, nu: f64, r: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_disjoint()?;
        let s = gamma + nu * self.ridge;
        if s <= 0.0 {
            return Err(Error::bad(
                "local problem has no unique solution without strong convexity",
            ));
        }
        let v: Vec<f64> = r.iter().map(|x| x / s).collect();
        let (w, gh) = self.prox_abs(&v, nu / s);
        let g = gh.iter().zip(&w).map(|(gi, wi)| gi + self.ridge * wi).collect();
        Ok((w, g))
    }

    /// Whether `g ∈ ∂F(w)` up to `tol`, treating residuals below `tol` as kinks.
    pub fn is_subgradient(&self, w: &[f64], g: &[f64], tol: f64) -> bool {
        let h: Vec<f64> = g.iter().zip(w).map(|(gi, wi)| gi - self.ridge * wi).collect();
        let mut covered = vec![false; self.dim];
        for t in &self.terms {
            let beta = self.beta(t);
            let r = t.residual(w);
            let ok = match t.kind {
                TermKind::Boundary { coord, .. } => {
                    covered[coord] = true;
                    let th = h[coord];
                    if r.abs() > tol {
                        (th - beta * r.signum()).abs() <= tol
                    } else {
                        th.abs() <= beta + tol
                    }
                }
                TermKind::Difference { i, j } => {
                    covered[i] = true;
                    covered[j] = true;
                    let th = h[i];
                    let paired = (h[i] + h[j]).abs() <= tol;
                    if r.abs() > tol {
                        paired && (th - beta * r.signum()).abs() <= tol
                    } else {
                        paired && th.abs() <= beta + tol
                    }
                }
            };
            if !ok {
                return false;
            }
        }
        h.iter().zip(&covered).all(|(hi, c)| *c || hi.abs() <= tol)
    }

    /// Upper bound on subgradient norms over the domain ball.
    pub fn lipschitz_bound(&self) -> f64 {
        let sq: f64 = self
            .terms
            .iter()
            .map(|t| self.beta(t).powi(2) * t.atom_norm_sq())
            .sum();
        sq.sqrt() + self.ridge * self.domain_radius
    }

    /// Per-term Moreau envelope gap `Σ β²·‖∂r‖²·γ/2`, the worst case of `F − F_γ`.
    pub fn envelope_gap(&self, gamma: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| 0.5 * gamma * self.beta(t).powi(2) * t.atom_norm_sq())
            .sum()
    }
}

fn robust_ceil(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Smallest round budget `T` for which [`default_b`] is valid.
pub(crate) fn min_valid_t(lambda: f64) -> usize {
    robust_ceil(1.0 / (2.0 * lambda) - 2.0).max(0.0) as usize
}

/// `b = 1/(2λk√(2k))` with `k = T + 2`, valid once `λk ≥ 1/2`.
pub fn default_b(lambda: f64, t: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::bad(format!("default_b needs lambda > 0, got {lambda}")));
    }
    if t < min_valid_t(lambda) {
        return Err(Error::bad(format!(
            "T={t} below the valid regime T >= {} for lambda={lambda}",
            min_valid_t(lambda)
        )));
    }
    let k = (t + 2) as f64;
    Ok(1.0 / (2.0 * lambda * k * (2.0 * k).sqrt()))
}

/// The non-smooth hard pair: a boundary anchor plus alternating difference
/// chains, so each round can extend the support by one coordinate.
pub fn build_nonsmooth_hard_pair(
    lambda: f64,
    t: usize,
    d: usize,
    b: f64,
    scale: f64,
    m: usize,
) -> Result<InstanceBundle> {
    let k = t + 2;
    if k > d {
        return Err(Error::bad(format!("k=T+2={k} exceeds dimension d={d}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::bad(format!("lambda={lambda} must be non-negative")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::bad(format!("scale={scale} must be positive")));
    }
    let b_max = 1.0 / (k as f64).sqrt();
    if !(0.0..=b_max).contains(&b) {
        return Err(Error::bad(format!("b={b} outside [0, 1/sqrt(k)={b_max}]")));
    }
    check_even_m(m)?;

    let wd = 1.0 / (2.0 * k as f64).sqrt();
    // One-based pairs (p, p+1) with p+1 ≤ k; F₁ takes even p, F₂ odd p.
    let pairs = |start: usize| -> Vec<AbsTerm> {
        (start..k)
            .step_by(2)
            .map(|p| AbsTerm {
                weight: wd,
                kind: TermKind::Difference { i: p - 1, j: p },
            })
            .collect()
    };
    let mut t1 = vec![AbsTerm {
        weight: 1.0 / 2f64.sqrt(),
        kind: TermKind::Boundary { coord: 0, offset: b },
    }];
    t1.extend(pairs(2));
    let t2 = pairs(1);
    let mk = |terms| {
        LocalFunction::PiecewiseAbs(PiecewiseAbsLocal {
            dim: d,
            terms,
            ridge: lambda,
            scale,
            domain_radius: 1.0,
        })
    };
    let (optimum, _) = nonsmooth_pair_optimum(lambda, k, d, b, scale)?;
    let params = InstanceParams {
        delta: scale,
        lambda,
        d,
        m,
        t: Some(t),
        b: Some(b),
        j: None,
        scale: Some(scale),
    };
    let mut bundle = InstanceBundle {
        family: Family::Nonsmooth,
        params,
        seed: None,
        locals: split_assignment(m, mk(t1), mk(t2)),
        optimum,
        optimum_value: 0.0,
    };
    bundle.optimum_value = bundle.eval(&bundle.optimum);
    Ok(bundle)
}

/// Coefficients of the averaged chain: anchor weight `a` and edge weight `c`.
pub fn chain_weights(k: usize, scale: f64) -> (f64, f64) {
    (
        scale / (2.0 * 2f64.sqrt()),
        scale / (2.0 * (2.0 * k as f64).sqrt()),
    )
}

/// Minimizer of the average chain for effective ridge `rho`, ignoring the ball.
fn chain_profile(a: f64, c: f64, b: f64, rho: f64, k: usize) -> (f64, f64) {
    let km1 = (k - 1) as f64;
    let u0 = if rho == 0.0 { b } else { b.min(a / (rho * k as f64)) };
    if rho * km1 * u0 <= c {
        return (u0, u0);
    }
    (b.min((a - c) / rho), c / (rho * km1))
}

/// Exact minimizer of `(F₁ + F₂)/2` over the unit ball, with its value.
///
/// The minimizer is constant on coordinates `2..k` and zero past `k`; a
/// bisection on the ball multiplier handles the constrained case.
pub fn nonsmooth_pair_optimum(lambda: f64, k: usize, d: usize, b: f64, scale: f64) -> Result<(Vec<f64>, f64)> {
    if k < 2 || k > d {
        return Err(Error::bad(format!("chain length k={k} must lie in [2, d={d}]")));
    }
    let (a, c) = chain_weights(k, scale);
    let sq = |(u, v): (f64, f64)| u * u + (k - 1) as f64 * v * v;
    let mut profile = chain_profile(a, c, b, lambda, k);
    if sq(profile) > 1.0 {
        let mut lo = 0.0;
        let mut hi = 1.0f64.max(lambda);
        while sq(chain_profile(a, c, b, lambda + hi, k)) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sq(chain_profile(a, c, b, lambda + mid, k)) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        profile = chain_profile(a, c, b, lambda + hi, k);
    }
    let mut w = vec![0.0; d];
    w[0] = profile.0;
    for x in w.iter_mut().take(k).skip(1) {
        *x = profile.1;
    }
    let value = a * (b - w[0]).abs()
        + c * w.windows(2).take(k - 1).map(|p| (p[0] - p[1]).abs()).sum::<f64>()
        + 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>();
    Ok((w, value))
}

/// Violation of the first-order optimality conditions of the averaged chain
/// at `w` (zero for an exact minimizer). Used as an independent certificate.
pub(crate) fn chain_kkt_violation(lambda: f64, k: usize, b: f64, scale: f64, w: &[f64], tol: f64) -> f64 {
    let (a, c) = chain_weights(k, scale);
    let tail_violation: f64 = w.iter().skip(k).map(|x| x.abs()).fold(0.0, f64::max);
    let wn = norm(w);
    let suffix = |i: usize| -> f64 { w[i..k].iter().sum() };
    // Recover the effective ridge from a binding condition when on the sphere.
    let rho = if wn < 1.0 - 1e-9 {
        lambda
    } else if w[0] < b - tol {
        a / suffix(0)
    } else if let Some(i) = (1..k).find(|&i| w[i - 1] - w[i] > tol) {
        c / suffix(i)
    } else {
        lambda
    };
    let mut viol = tail_violation;
    if rho < lambda - 1e-12 {
        viol = viol.max(lambda - rho);
    }
    let check = |flow: f64, r: f64, weight: f64| -> f64 {
        // flow must lie in weight·sign(r), i.e. weight·∂|r| with the chain's orientation.
        if r > tol {
            (flow - weight).abs()
        } else if r < -tol {
            (flow + weight).abs()
        } else {
            (flow.abs() - weight).max(0.0)
        }
    };
    viol = viol.max(check(rho * suffix(0), b - w[0], a));
    for i in 1..k {
        viol = viol.max(check(rho * suffix(i), w[i - 1] - w[i], c));
    }
    viol
}

/// `min_w a|b − w| + c|w| + ρw²/2`, the value of the averaged pair on any
/// subspace that leaves the last chain coordinate at zero.
pub fn one_dim_reduction_min(a: f64, c: f64, b: f64, rho: f64) -> f64 {
    let phi = |w: f64| a * (b - w).abs() + c * w.abs() + 0.5 * rho * w * w;
    let mut best = phi(0.0).min(phi(b));
    if rho > 0.0 {
        best = best.min(phi(((a - c) / rho).clamp(0.0, b)));
    }
    best
}
