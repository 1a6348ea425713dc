use super::gradient::{accelerated, Momentum};
use super::{averaged_round, gradient_round, project_ball, Recorder, SolverConfig, Transcript};
use crate::error::{Error, Result};
use crate::instances::PiecewiseAbsLocal;
use crate::numkit::axpy;
use crate::oracle::{OracleRequest, Primitive, Simulation};

fn piecewise_locals<'a>(sim: &Simulation<'a>) -> Result<Vec<&'a PiecewiseAbsLocal>> {
    sim.instance()
        .locals
        .iter()
        .map(|f| {
            f.as_piecewise()
                .ok_or_else(|| Error::bad("solver needs piecewise absolute-value locals"))
        })
        .collect()
}

/// Averaged gradient of the per-machine Moreau envelopes at `y`.
///
/// Machine `j` requests `p = prox_{γh_j}(y)` for its absolute-value part
/// `h_j` (the `w` with `(1 − γλ)w + γ∂F_j(w) ∋ y`) and contributes
/// `(y − p)/γ + λy`.
fn envelope_round(sim: &mut Simulation<'_>, y: &[f64], gamma: f64, ridge: f64) -> Result<(Vec<f64>, usize)> {
    averaged_round(sim, |s, j| {
        let p = s.local_compute(
            j,
            OracleRequest::NewPoint {
                gamma: 1.0 - gamma * ridge,
                nu: gamma,
                rhs: vec![(1.0, Primitive::Point(y.to_vec()))],
                candidate: None,
                tie: crate::instances::TieRule::MIDPOINT,
            },
        )?;
        Ok(y.iter().zip(&p).map(|(yi, pi)| (yi - pi) / gamma + ridge * yi).collect())
    })
}

/// Accelerated gradient on the Huber-smoothed locals (smoothness `1/γ + λ`),
/// projected onto the domain ball. Suboptimality is always measured on the
/// true objective; when it stalls above `eps`, `γ` is halved and the method
/// restarts from the current point.
pub fn smoothed_dagd(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    let mut rec = Recorder::start(sim, config)?;
    let locals = piecewise_locals(sim)?;
    let ridge = locals.iter().map(|p| p.ridge).fold(f64::INFINITY, f64::min);
    let radius = locals.iter().map(|p| p.domain_radius).fold(f64::INFINITY, f64::min);
    let mut gamma = config.smoothing.unwrap_or(config.eps / 2.0);
    let mut x = vec![0.0; sim.dim()];
    while rec.active() {
        if gamma * ridge >= 1.0 {
            return Err(Error::bad(format!("smoothing {gamma} too large for ridge {ridge}")));
        }
        rec.smoothing_schedule.push(gamma);
        let smooth = 1.0 / gamma + ridge;
        let momentum = Momentum::for_conditioning(smooth, ridge);
        let window = if ridge > 0.0 {
            (10.0 * (smooth / ridge).sqrt()).ceil() as usize
        } else {
            200
        }
        .max(50);
        let stage_start = sim.round();
        let mut best = rec.best_suboptimality();
        let mut best_round = stage_start;
        let stalled = |r: &Recorder| {
            let now = r.best_suboptimality();
            if now < best * (1.0 - 1e-3) {
                best = now;
                best_round = sim_round_of(r);
            }
            let in_stage = sim_round_of(r) - stage_start;
            sim_round_of(r) - best_round > window.max(in_stage / 2)
        };
        x = accelerated(
            sim,
            &mut rec,
            smooth,
            momentum,
            Some(radius),
            stalled,
            |s, y| envelope_round(s, y, gamma, ridge),
            x,
        )?;
        gamma /= 2.0;
    }
    Ok(rec.finish(sim))
}

fn sim_round_of(r: &Recorder) -> usize {
    r.last_round()
}

/// Projected distributed subgradient method with step `η₀/√(t+1)`, where
/// kinks are resolved by the configured tie rule.
pub fn subgradient_method(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    let mut rec = Recorder::start(sim, config)?;
    let tie = config.tie()?;
    let locals = piecewise_locals(sim)?;
    let radius = locals.iter().map(|p| p.domain_radius).fold(f64::INFINITY, f64::min);
    let lip = locals.iter().map(|p| p.lipschitz_bound()).fold(0.0, f64::max);
    let eta0 = config.step.unwrap_or(radius / lip);
    let mut x = vec![0.0; sim.dim()];
    let mut t = 0usize;
    while rec.active() {
        let (g, bc) = gradient_round(sim, &x, tie)?;
        axpy(-eta0 / ((t + 1) as f64).sqrt(), &g, &mut x);
        project_ball(&mut x, radius);
        rec.record(sim, &x, bc, false)?;
        t += 1;
    }
    Ok(rec.finish(sim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_nonsmooth_hard_pair, default_b, TieRule};
    use crate::numkit::norm;
    use crate::solvers::SolverKind;

    fn instance(lambda: f64, t: usize, d: usize) -> crate::instances::InstanceBundle {
        let b = if lambda > 0.0 { default_b(lambda, t).unwrap() } else { 1.0 / ((t + 2) as f64).sqrt() };
        build_nonsmooth_hard_pair(lambda, t, d, b, 1.0, 2).unwrap()
    }

    #[test]
    fn smoothed_reaches_target_and_stays_in_ball() {
        let inst = instance(0.05, 18, 24);
        let mut sim = Simulation::new(&inst);
        let eps = 1e-4;
        let t = smoothed_dagd(&mut sim, &SolverConfig::new(SolverKind::SmoothedDagd, eps, 20_000)).unwrap();
        assert!(t.final_suboptimality() <= eps, "final {}", t.final_suboptimality());
        assert!(norm(&t.final_point) <= 1.0 + 1e-12);
        assert!(t.records.iter().all(|r| r.support_max <= r.round + 1));
    }

    #[test]
    fn smoothed_without_ridge_converges() {
        let inst = instance(0.0, 8, 12);
        let mut sim = Simulation::new(&inst);
        let eps = 1e-3;
        let t = smoothed_dagd(&mut sim, &SolverConfig::new(SolverKind::SmoothedDagd, eps, 50_000)).unwrap();
        assert!(t.final_suboptimality() <= eps);
    }

    #[test]
    fn envelope_gradient_is_exact_away_from_kinks() {
        // Point with all term residuals larger than γ·β: envelope gradient equals the gradient.
        let y = [0.9, 0.5, 0.1, -0.4];
        let inst = build_nonsmooth_hard_pair(0.1, 2, 4, 0.3, 1.0, 2).unwrap();
        let gamma = 1e-3;
        for f in &inst.locals {
            let p = f.as_piecewise().unwrap();
            let (prox, _) = p.prox_abs(&y, gamma);
            let env: Vec<f64> = y.iter().zip(&prox).map(|(a, b)| (a - b) / gamma + p.ridge * a).collect();
            let g = p.subgrad(&y, TieRule::MIDPOINT);
            for (a, b) in env.iter().zip(&g) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn subgradient_method_respects_support_for_all_tie_rules() {
        let inst = instance(0.05, 18, 64);
        for alpha in [0.0, 0.5, 1.0] {
            let mut sim = Simulation::new(&inst);
            let mut cfg = SolverConfig::new(SolverKind::Subgradient, 1e-9, 20);
            cfg.tie_alpha = Some(alpha);
            let t = subgradient_method(&mut sim, &cfg).unwrap();
            assert_eq!(t.rounds_used, 20);
            assert!(t.records.iter().all(|r| r.support_max <= r.round + 1));
        }
    }
}
