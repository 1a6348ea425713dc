use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{one_dim_reduction_min, Family, InstanceBundle};
use crate::numkit::{symmetric_solve, SymMat};

/// Minimum of the average objective over `E_k` (first `k` coordinates free,
/// the rest zero), as a value and as a gap to the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubspaceBest {
    pub value: f64,
    pub gap: f64,
}

/// Exact `min_{w ∈ E_k} F(w)`.
///
/// Quadratic bundles solve for the error `e = w_k − w*` of the restricted
/// minimizer directly and return `eᵀHe/2`, which stays accurate when the gap
/// is far below the rounding level of `F` itself. For the non-smooth
/// pair with chain length `K`, any `w ∈ E_k` with `k < K` satisfies
/// `F(w) ≥ a|b − w₁| + c|w₁| + λw₁²/2` (triangle inequality along the
/// chain), with equality when `w₂ = … = 0`, so the minimum is one-dimensional.
pub fn best_in_subspace(instance: &InstanceBundle, k: usize) -> Result<SubspaceBest> {
    let d = instance.dim();
    if k > d {
        return Err(Error::bad(format!("k={k} exceeds dimension d={d}")));
    }
    if instance.is_quadratic() {
        let gap = quadratic_gap(instance, k)?;
        return Ok(SubspaceBest {
            value: instance.optimum_value + gap,
            gap,
        });
    }
    let value = if k == 0 {
        instance.eval(&vec![0.0; d])
    } else if instance.family == Family::Nonsmooth {
        let p = &instance.params;
        let chain = p.t.ok_or_else(|| Error::bad("non-smooth params need T"))? + 2;
        if k >= chain {
            instance.optimum_value
        } else {
            let scale = p.scale.unwrap_or(1.0);
            let (a, c) = crate::instances::chain_weights(chain, scale);
            one_dim_reduction_min(a, c, p.b.unwrap_or(0.0), p.lambda)
        }
    } else {
        return Err(Error::NotQuadratic);
    };
    Ok(SubspaceBest {
        value,
        gap: value - instance.optimum_value,
    })
}

/// `H_kk e_k = H_{k,rest} w*_rest`, `e_rest = −w*_rest`, gap `eᵀHe/2`.
fn quadratic_gap(instance: &InstanceBundle, k: usize) -> Result<f64> {
    let d = instance.dim();
    let w = &instance.optimum;
    let h = instance.average_hessian()?;
    let mut e = vec![0.0; d];
    for i in k..d {
        e[i] = -w[i];
    }
    if k > 0 {
        let rhs: Vec<f64> = (0..k).map(|i| (k..d).map(|j| h.get(i, j) * w[j]).sum()).collect();
        let hk = SymMat::from_upper_fn(k, |i, j| h.get(i, j));
        let ek = symmetric_solve(&hk, &rhs)?;
        e[..k].copy_from_slice(&ek);
    }
    Ok(0.5 * h.quad_form(&e))
}
