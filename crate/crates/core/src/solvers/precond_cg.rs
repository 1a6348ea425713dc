use super::{averaged_round, Recorder, SolverConfig, Transcript};
use crate::error::{Error, Result};
use crate::numkit::{axpy, dot};
use crate::oracle::{OracleRequest, Primitive, Simulation};

/// Preconditioned conjugate gradient with the designated machine's Hessian
/// `P = ∇²F_{m} + μI` as preconditioner (`μ` defaults to δ).
///
/// Round 1 averages gradients at the origin. Every CG iteration then costs
/// two rounds: the designated machine solves with `P` and shares the new
/// direction `p`, then every machine shares its `∇²F_j p`. On direction
/// rounds the recorded iterate is the corrected point `x + P⁻¹r`.
pub fn precond_cg(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    let mut rec = Recorder::start(sim, config)?;
    let inst = sim.instance();
    if !inst.is_quadratic() {
        return Err(Error::NotQuadratic);
    }
    let d = sim.dim();
    let des = sim.designated();
    let mu = config.precond_shift.unwrap_or(inst.params.delta);
    let shift = vec![mu; d];
    let zero = vec![0.0; d];

    let mut x = vec![0.0; d];
    if !rec.active() {
        return Ok(rec.finish(sim));
    }
    let (g, bc) = averaged_round(sim, |s, j| s.local_compute(j, OracleRequest::gradient(&zero)))?;
    rec.record(sim, &x, bc, false)?;
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut p = vec![0.0; d];
    let mut rz_prev: Option<f64> = None;

    while rec.active() {
        // Direction round.
        let z = sim.local_compute(des, OracleRequest::hessian_solve(&zero, &shift, &r))?;
        let rz = dot(&r, &z);
        if !(rz.is_finite() && rz > 0.0) {
            break;
        }
        let beta = rz_prev.map_or(0.0, |prev| rz / prev);
        p = z.iter().zip(&p).map(|(zi, pi)| zi + beta * pi).collect();
        sim.local_compute(des, OracleRequest::RawSpanPoint {
            rhs: vec![(1.0, Primitive::Point(p.clone()))],
            tie: crate::instances::TieRule::MIDPOINT,
        })?;
        let bc = sim.communicate();
        let mut corrected = x.clone();
        axpy(1.0, &z, &mut corrected);
        rec.record(sim, &corrected, bc, false)?;
        if !rec.active() {
            break;
        }

        // Curvature round.
        let (hp, bc) = averaged_round(sim, |s, j| s.local_compute(j, OracleRequest::hessian_apply(&zero, &zero, &p)))?;
        let php = dot(&p, &hp);
        if !(php.is_finite() && php > 0.0) {
            rec.record(sim, &x, bc, false)?;
            break;
        }
        let alpha = rz / php;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &hp, &mut r);
        rz_prev = Some(rz);
        rec.record(sim, &x, bc, false)?;
    }
    Ok(rec.finish(sim))
}
