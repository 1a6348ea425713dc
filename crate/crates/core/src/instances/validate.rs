use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::nonsmooth::chain_kkt_violation;
use super::{Family, InstanceBundle, LocalFunction, TieRule};
use crate::error::{Error, Result};
use crate::numkit::{norm, spectral_bounds, spectral_norm, sub};

const RELATED_SLACK: f64 = 1e-9;
const SPECTRUM_SLACK: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;
const KKT_TOL: f64 = 1e-9;
const LIPSCHITZ_SAMPLES: usize = 256;

/// Largest pairwise gaps `(‖A_i − A_j‖, ‖b_i − b_j‖, |c_i − c_j|)`.
pub fn delta_gaps(bundle: &InstanceBundle) -> Result<(f64, f64, f64)> {
    let mut distinct: Vec<&LocalFunction> = Vec::new();
    for f in &bundle.locals {
        if f.as_quadratic().is_none() {
            return Err(Error::NotQuadratic);
        }
        if !distinct.contains(&f) {
            distinct.push(f);
        }
    }
    let mut gaps = (0.0f64, 0.0f64, 0.0f64);
    for (i, fi) in distinct.iter().enumerate() {
        for fj in &distinct[i + 1..] {
            let (qi, qj) = (fi.as_quadratic().unwrap(), fj.as_quadratic().unwrap());
            gaps.0 = gaps.0.max(spectral_norm(&qi.a.combine(1.0, &qj.a, -1.0))?);
            gaps.1 = gaps.1.max(norm(&sub(&qi.b, &qj.b)));
            gaps.2 = gaps.2.max((qi.c - qj.c).abs());
        }
    }
    Ok(gaps)
}

/// Whether all quadratic locals are pairwise δ-related.
pub fn check_delta_related(bundle: &InstanceBundle, delta: f64) -> Result<bool> {
    let (a, b, c) = delta_gaps(bundle)?;
    let lim = delta + RELATED_SLACK;
    Ok(a <= lim && b <= lim && c <= lim)
}

/// Outcome of one structural check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {} ({})",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn spectrum_check(bundle: &InstanceBundle) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut seen: Vec<&LocalFunction> = Vec::new();
    for f in &bundle.locals {
        if seen.contains(&f) {
            continue;
        }
        seen.push(f);
        let q = f.as_quadratic().ok_or(Error::NotQuadratic)?;
        let (lo, hi) = spectral_bounds(&q.hessian())?;
        worst = worst.max(q.certified_lambda - lo).max(hi - q.certified_smooth);
    }
    Ok(Check::new(
        "spectrum",
        worst <= SPECTRUM_SLACK,
        format!("worst excursion {worst:.3e}"),
    ))
}

fn lipschitz_check(bundle: &InstanceBundle, seed: u64) -> Check {
    let d = bundle.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..LIPSCHITZ_SAMPLES {
        let mut w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&w);
        let r: f64 = rng.random_range(0.0..1.0);
        w.iter_mut().for_each(|x| *x *= r / n);
        for f in &bundle.locals {
            let p = f.as_piecewise().expect("non-smooth family");
            let bound = p.scale + p.ridge * p.domain_radius;
            let g = p.subgrad(&w, TieRule::MIDPOINT);
            worst = worst.max(norm(&g) - bound);
        }
    }
    Check::new(
        "lipschitz",
        worst <= 1e-12,
        format!("max norm minus bound {worst:.3e}"),
    )
}

/// Runs the structural battery appropriate to the bundle's family.
pub fn validate_bundle(bundle: &InstanceBundle) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let d = bundle.dim();
    let shapes_ok = bundle.m() >= 2
        && bundle.m() % 2 == 0
        && bundle.locals.iter().all(|f| f.dim() == d)
        && bundle.optimum.iter().all(|x| x.is_finite());
    checks.push(Check::new(
        "structure",
        shapes_ok,
        format!("m={}, d={d}", bundle.m()),
    ));
    if !shapes_ok {
        return Ok(checks);
    }
    match bundle.family {
        Family::Smooth | Family::OneRound => {
            let delta = bundle.params.delta;
            let (a, b, c) = delta_gaps(bundle)?;
            checks.push(Check::new(
                "delta_related",
                check_delta_related(bundle, delta)?,
                format!("gaps A={a:.6e} b={b:.6e} c={c:.6e} vs delta={delta}"),
            ));
            checks.push(spectrum_check(bundle)?);
            let res = bundle.optimum_residual()?;
            checks.push(Check::new(
                "optimum_residual",
                res <= RESIDUAL_TOL,
                format!("|grad F(w*)| = {res:.3e}"),
            ));
        }
        Family::Nonsmooth => {
            checks.push(lipschitz_check(bundle, bundle.seed.unwrap_or(0)));
            let p = &bundle.params;
            let k = p.t.map(|t| t + 2).ok_or_else(|| Error::bad("non-smooth params need T"))?;
            let viol = chain_kkt_violation(
                p.lambda,
                k,
                p.b.unwrap_or(0.0),
                p.scale.unwrap_or(1.0),
                &bundle.optimum,
                1e-12,
            );
            checks.push(Check::new(
                "optimum_kkt",
                viol <= KKT_TOL,
                format!("optimality violation {viol:.3e}"),
            ));
        }
    }
    let value_gap = (bundle.eval(&bundle.optimum) - bundle.optimum_value).abs();
    checks.push(Check::new(
        "optimum_value",
        value_gap <= 1e-12 * bundle.optimum_value.abs().max(1.0),
        format!("|F(w*) - stored| = {value_gap:.3e}"),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_nonsmooth_hard_pair, build_smooth_hard_pair, default_b};

    #[test]
    fn smooth_bundle_passes() {
        let b = build_smooth_hard_pair(1.0, 0.1, 40, 2).unwrap();
        let checks = validate_bundle(&b).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn nonsmooth_bundle_passes() {
        let b = build_nonsmooth_hard_pair(0.05, 18, 64, default_b(0.05, 18).unwrap(), 1.0, 2).unwrap();
        let checks = validate_bundle(&b).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn tampered_optimum_is_caught() {
        let mut b = build_smooth_hard_pair(1.0, 0.1, 40, 2).unwrap();
        b.optimum[2] += 1e-4;
        let checks = validate_bundle(&b).unwrap();
        let res = checks.iter().find(|c| c.name == "optimum_residual").unwrap();
        assert!(!res.passed);
    }

    #[test]
    fn delta_relatedness_rejects_nonsmooth() {
        let b = build_nonsmooth_hard_pair(0.1, 2, 6, 0.1, 1.0, 2).unwrap();
        assert_eq!(check_delta_related(&b, 1.0), Err(Error::NotQuadratic));
    }
}
