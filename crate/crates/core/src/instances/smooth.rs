use super::{check_even_m, split_assignment, Family, InstanceBundle, InstanceParams, LocalFunction, QuadraticLocal};
use crate::error::{Error, Result};
use crate::numkit::{norm, symmetric_solve, unit, SymMat};

/// Smaller root of `ζ² − 2xζ + 1 = 0` with `x = 1 + 2λ/(δ(1−λ))`.
pub fn zeta(delta: f64, lambda: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) || !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::bad(format!(
            "zeta needs delta in (0,1] and lambda in (0,1), got delta={delta}, lambda={lambda}"
        )));
    }
    let x = 1.0 + 2.0 * lambda / (delta * (1.0 - lambda));
    // 1/(x + √(x²−1)) avoids cancellation when x is large.
    Ok(1.0 / (x + (x * x - 1.0).sqrt()))
}

/// Block pattern with `[[1,−1],[−1,1]]` blocks starting at zero-based `first`.
/// Coordinates before `first` get a lone `1`, as does a truncated last block.
fn block_pattern(d: usize, first: usize) -> SymMat {
    let mut a = SymMat::zeros(d);
    for i in 0..first.min(d) {
        a.set(i, i, 1.0);
    }
    let mut i = first;
    while i < d {
        a.set(i, i, 1.0);
        if i + 1 < d {
            a.set(i + 1, i + 1, 1.0);
            a.set(i, i + 1, -1.0);
        }
        i += 2;
    }
    a
}

fn check_smooth_params(delta: f64, lambda: f64, d: usize) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::bad(format!("delta={delta} outside (0,1]")));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::bad(format!("lambda={lambda} outside [0,1)")));
    }
    if d < 2 {
        return Err(Error::bad(format!("dimension d={d} must be at least 2")));
    }
    Ok(())
}

/// Exact finite-dimensional optimum of the smooth pair, with the geometric
/// profile `(ζ, ζ², …)` as a cross-check when `λ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothOptimum {
    pub w: Vec<f64>,
    pub value: f64,
    pub zeta: Option<f64>,
    /// `‖w − (ζᵏ)‖`
    pub geometric_deviation: Option<f64>,
}

pub fn smooth_pair_optimum(delta: f64, lambda: f64, d: usize) -> Result<SmoothOptimum> {
    let bundle = build_smooth_hard_pair(delta, lambda, d, 2)?;
    let mut out = SmoothOptimum {
        w: bundle.optimum.clone(),
        value: bundle.optimum_value,
        zeta: None,
        geometric_deviation: None,
    };
    if lambda > 0.0 {
        let z = zeta(delta, lambda)?;
        let geo: Vec<f64> = (1..=d as i32).map(|k| z.powi(k)).collect();
        let dev = norm(&crate::numkit::sub(&out.w, &geo));
        // Truncation perturbs the tail only by O(ζ^d) relative to ‖w*‖.
        if dev > 10.0 * z.powi(d as i32) * norm(&geo) + 1e-12 {
            return Err(Error::bad(format!(
                "finite optimum deviates from geometric profile by {dev:e}"
            )));
        }
        out.zeta = Some(z);
        out.geometric_deviation = Some(dev);
    }
    Ok(out)
}

/// The smooth hard pair. Both locals are λ-strongly convex, 1-smooth and
/// (δ/2)-related; their average is a scaled tridiagonal quadratic.
pub fn build_smooth_hard_pair(delta: f64, lambda: f64, d: usize, m: usize) -> Result<InstanceBundle> {
    check_smooth_params(delta, lambda, d)?;
    check_even_m(m)?;
    let c = delta * (1.0 - lambda) / 4.0;
    let ridge = vec![lambda / 2.0; d];
    let mut a1 = block_pattern(d, 1).scale(c);
    a1.add_diag(&ridge);
    let mut a2 = block_pattern(d, 0).scale(c);
    a2.add_diag(&ridge);
    let b1: Vec<f64> = unit(d, 0).iter().map(|v| -2.0 * c * v).collect();

    let f1 = LocalFunction::Quadratic(QuadraticLocal {
        a: a1,
        b: b1,
        c: 0.0,
        certified_lambda: lambda,
        certified_smooth: 1.0,
    });
    let f2 = LocalFunction::Quadratic(QuadraticLocal {
        a: a2,
        b: vec![0.0; d],
        c: 0.0,
        certified_lambda: lambda,
        certified_smooth: 1.0,
    });
    let params = InstanceParams {
        delta,
        lambda,
        d,
        m,
        t: None,
        b: None,
        j: None,
        scale: None,
    };
    InstanceBundle::with_quadratic_optimum(Family::Smooth, params, None, split_assignment(m, f1, f2))
}

impl InstanceBundle {
    /// Assembles a quadratic bundle and stores the exact minimizer of the average.
    pub fn with_quadratic_optimum(
        family: Family,
        params: InstanceParams,
        seed: Option<u64>,
        locals: Vec<LocalFunction>,
    ) -> Result<InstanceBundle> {
        let mut bundle = InstanceBundle {
            family,
            params,
            seed,
            locals,
            optimum: Vec::new(),
            optimum_value: 0.0,
        };
        let d = bundle.locals.first().map(|f| f.dim()).ok_or_else(|| Error::bad("no locals"))?;
        bundle.optimum = vec![0.0; d];
        let h = bundle.average_hessian()?;
        let mut rhs = vec![0.0; d];
        let m = bundle.m() as f64;
        for f in &bundle.locals {
            let q = f.as_quadratic().ok_or(Error::NotQuadratic)?;
            for (r, b) in rhs.iter_mut().zip(&q.b) {
                *r -= b / m;
            }
        }
        bundle.optimum = symmetric_solve(&h, &rhs)?;
        bundle.optimum_value = bundle.eval(&bundle.optimum);
        Ok(bundle)
    }
}
