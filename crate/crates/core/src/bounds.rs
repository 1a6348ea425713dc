//! Closed-form round lower bounds and suboptimality curves.
//!
//! Round bounds are returned raw; they may be negative in easy regimes and
//! are only clamped at presentation time. Logarithms are natural.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::zeta;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::bad(format!("eps={eps} must be positive and finite")));
    }
    Ok(())
}

fn robust_ceil(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// `T₀ = max(0, ⌈1/(2λ) − 2⌉)`, the first round budget the non-smooth curve covers.
pub fn nonsmooth_t0(lambda: f64) -> f64 {
    robust_ceil(1.0 / (2.0 * lambda) - 2.0).max(0.0)
}

/// `‖w*‖` of the infinite-dimensional smooth hard instance, `ζ/√(1 − ζ²)`.
pub fn smooth_w_star_norm(delta: f64, lambda: f64) -> Result<f64> {
    let z = zeta(delta, lambda)?;
    Ok(z / (1.0 - z * z).sqrt())
}

/// Strongly convex smooth case:
/// `(1/4)(√(1 + δ(1/λ − 1)) − 1)·ln(λ‖w*‖²/(4ε)) − 1/2`.
pub fn thm1_rounds_sc(delta: f64, lambda: f64, eps: f64, w_star_norm: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::bad(format!(
            "need lambda in (0,1) and delta in (0,1], got lambda={lambda}, delta={delta}"
        )));
    }
    check_eps(eps)?;
    let growth = (1.0 + delta * (1.0 / lambda - 1.0)).sqrt() - 1.0;
    Ok(0.25 * growth * (lambda * w_star_norm * w_star_norm / (4.0 * eps)).ln() - 0.5)
}

/// Convex smooth case: `√(3δ/(32ε))·‖w*‖ − 2`.
pub fn thm1_rounds_cvx(delta: f64, eps: f64, w_star_norm: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::bad(format!("delta={delta} must be non-negative")));
    }
    check_eps(eps)?;
    Ok((3.0 * delta / (32.0 * eps)).sqrt() * w_star_norm - 2.0)
}

/// A round bound together with the largest `ε` for which it is established.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeBound {
    pub value: f64,
    pub threshold: f64,
    pub valid: bool,
}

/// Lipschitz case: `1/(8ε) − 2` at `λ = 0`, `√(1/(16λε)) − 2` otherwise.
pub fn thm2_rounds(lambda: f64, eps: f64) -> Result<RegimeBound> {
    thm2_rounds_scaled(1.0, lambda, eps)
}

/// The same chain for the instance scaled by `δ`:
/// `δ/(8ε) − 2` at `λ = 0`, `δ√(1/(16λε)) − 2` otherwise.
pub fn thm2_rounds_scaled(delta: f64, lambda: f64, eps: f64) -> Result<RegimeBound> {
    check_eps(eps)?;
    if !(lambda >= 0.0) || !(delta >= 0.0) {
        return Err(Error::bad(format!(
            "need lambda >= 0 and delta >= 0, got lambda={lambda}, delta={delta}"
        )));
    }
    let (value, threshold) = if lambda == 0.0 {
        (delta / (8.0 * eps) - 2.0, delta / 16.0)
    } else {
        let value = delta * (1.0 / (16.0 * lambda * eps)).sqrt() - 2.0;
        // Scaling by δ is the unscaled instance with ridge λ/δ, times δ.
        let threshold = if delta == 0.0 {
            0.0
        } else {
            let eff = lambda / delta;
            delta / (16.0 * eff * (nonsmooth_t0(eff) + 2.0).powi(2))
        };
        (value, threshold)
    };
    Ok(RegimeBound {
        value,
        threshold,
        valid: eps <= threshold,
    })
}

/// Smooth-instance suboptimality floor after `T` rounds.
///
/// For `λ > 0`: `(λ/2)ζ^{2(T+1)}‖w*‖² − (ζ^{2(d−1)}/2)‖w*‖²`, valid for `T ≤ d − 2`.
/// For `λ = 0`: `3δ‖w*‖²/(32(T+2)²)`, valid for `T ≤ (d − 1)/2`; it holds on
/// the instance of dimension `2T + 3`, not on an arbitrary fixed `d`.
pub fn subopt_curve_smooth(t: usize, delta: f64, lambda: f64, d: usize, w_star_norm: f64) -> Result<f64> {
    let wn2 = w_star_norm * w_star_norm;
    if lambda > 0.0 {
        if t + 2 > d {
            return Err(Error::bad(format!("T={t} outside regime T <= d-2 for d={d}")));
        }
        let z = zeta(delta, lambda)?;
        Ok(0.5 * lambda * z.powi(2 * (t as i32 + 1)) * wn2 - 0.5 * z.powi(2 * (d as i32 - 1)) * wn2)
    } else if lambda == 0.0 {
        if 2 * t + 1 > d {
            return Err(Error::bad(format!("T={t} outside regime T <= (d-1)/2 for d={d}")));
        }
        let k = (t + 2) as f64;
        Ok(3.0 * delta * wn2 / (32.0 * k * k))
    } else {
        Err(Error::bad(format!("lambda={lambda} must be non-negative")))
    }
}

/// Non-smooth suboptimality floor after `T` rounds:
/// `min{1/(16λ(T₀+2)²), 1/(16λ(T+2)²)}`, or `1/(8(T+2))` at `λ = 0`.
pub fn subopt_curve_nonsmooth(t: usize, lambda: f64) -> Result<f64> {
    let k = (t + 2) as f64;
    if lambda == 0.0 {
        return Ok(1.0 / (8.0 * k));
    }
    if !(lambda > 0.0) {
        return Err(Error::bad(format!("lambda={lambda} must be non-negative")));
    }
    let k0 = nonsmooth_t0(lambda) + 2.0;
    Ok((1.0 / (16.0 * lambda * k0 * k0)).min(1.0 / (16.0 * lambda * k * k)))
}

/// One-round levels: the ceiling reached by any single local minimizer and
/// the `δ²/λ` scale of the lower bound (its constant is not known).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm3Levels {
    pub trivial_upper: f64,
    pub lb_scale: f64,
}

pub fn thm3_levels(delta: f64, lambda: f64) -> Result<Thm3Levels> {
    if !crate::instances::delta_dominates(delta, lambda) {
        return Err(Error::bad(format!(
            "need delta >= 3*lambda > 0, got delta={delta}, lambda={lambda}"
        )));
    }
    Ok(Thm3Levels {
        trivial_upper: 81.0 * delta * delta / (8.0 * lambda),
        lb_scale: delta * delta / lambda,
    })
}

/// Inputs for [`BoundReport::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub delta: f64,
    pub lambda: f64,
    pub eps: f64,
    pub w_star_norm: f64,
    pub d: usize,
    #[serde(rename = "T")]
    pub t: usize,
}

/// Every formula that applies to the given inputs, by name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub outputs: Vec<(String, f64)>,
}

impl BoundReport {
    pub fn evaluate(inputs: BoundInputs) -> BoundReport {
        let BoundInputs {
            delta,
            lambda,
            eps,
            w_star_norm,
            d,
            t,
        } = inputs;
        let mut out = Vec::new();
        let mut push = |name: &str, v: Result<f64>| {
            if let Ok(v) = v {
                out.push((name.to_string(), v));
            }
        };
        push("thm1_rounds_sc", thm1_rounds_sc(delta, lambda, eps, w_star_norm));
        push("thm1_rounds_cvx", thm1_rounds_cvx(delta, eps, w_star_norm));
        push("thm2_rounds", thm2_rounds(lambda, eps).map(|b| b.value));
        push("thm2_threshold", thm2_rounds(lambda, eps).map(|b| b.threshold));
        push("thm2_rounds_scaled", thm2_rounds_scaled(delta, lambda, eps).map(|b| b.value));
        push("subopt_curve_smooth", subopt_curve_smooth(t, delta, lambda, d, w_star_norm));
        push("subopt_curve_nonsmooth", subopt_curve_nonsmooth(t, lambda));
        push("thm3_trivial_upper", thm3_levels(delta, lambda).map(|l| l.trivial_upper));
        push("thm3_lb_scale", thm3_levels(delta, lambda).map(|l| l.lb_scale));
        BoundReport { inputs, outputs: out }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}
