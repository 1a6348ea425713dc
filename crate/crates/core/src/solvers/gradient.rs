use super::{gradient_round, project_ball, Recorder, SolverConfig, Transcript};
use crate::error::{Error, Result};
use crate::numkit::axpy;
use crate::oracle::Simulation;

/// Distributed gradient descent: one averaged gradient per round and a
/// plain step `x ← x − η·ḡ` with `η = 1/L` by default.
pub fn dgd(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    let mut rec = Recorder::start(sim, config)?;
    let tie = config.tie()?;
    let eta = config.step.unwrap_or(1.0 / sim.instance().certified_smooth());
    let mut x = vec![0.0; sim.dim()];
    while rec.active() {
        let (g, bc) = gradient_round(sim, &x, tie)?;
        axpy(-eta, &g, &mut x);
        rec.record(sim, &x, bc, true)?;
    }
    Ok(rec.finish(sim))
}

/// Momentum schedule for the accelerated loop.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Momentum {
    Constant(f64),
    /// Nesterov's `t_{k+1} = (1 + √(1 + 4t_k²))/2` schedule.
    Schedule,
}

impl Momentum {
    pub(crate) fn for_conditioning(smooth: f64, strong: f64) -> Momentum {
        if strong > 0.0 {
            let q = (smooth / strong).sqrt();
            Momentum::Constant((q - 1.0) / (q + 1.0))
        } else {
            Momentum::Schedule
        }
    }
}

/// Accelerated gradient loop over an arbitrary averaged-gradient round.
/// Each round computes `ḡ(y)`, steps `x⁺ = P(y − ḡ/L)`, and extrapolates.
pub(crate) fn accelerated(
    sim: &mut Simulation<'_>,
    rec: &mut Recorder,
    smooth: f64,
    momentum: Momentum,
    radius: Option<f64>,
    mut stop: impl FnMut(&Recorder) -> bool,
    mut grad: impl FnMut(&mut Simulation<'_>, &[f64]) -> Result<(Vec<f64>, usize)>,
    start: Vec<f64>,
) -> Result<Vec<f64>> {
    let mut x = start.clone();
    let mut y = start;
    let mut t = 1.0f64;
    while rec.active() && !stop(rec) {
        let (g, bc) = grad(sim, &y)?;
        let mut xn = y.clone();
        axpy(-1.0 / smooth, &g, &mut xn);
        if let Some(r) = radius {
            project_ball(&mut xn, r);
        }
        let beta = match momentum {
            Momentum::Constant(b) => b,
            Momentum::Schedule => {
                let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let b = (t - 1.0) / tn;
                t = tn;
                b
            }
        };
        y = xn.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = xn;
        rec.record(sim, &x, bc, false)?;
    }
    Ok(x)
}

/// Distributed accelerated gradient descent with step `1/L` and momentum
/// `(√κ−1)/(√κ+1)`, or Nesterov's schedule when `λ = 0`.
pub fn dagd(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    let mut rec = Recorder::start(sim, config)?;
    let tie = config.tie()?;
    let inst = sim.instance();
    if !inst.is_quadratic() {
        return Err(Error::NotQuadratic);
    }
    let smooth = config.step.map_or(inst.certified_smooth(), |s| 1.0 / s);
    let momentum = config
        .momentum
        .map_or(Momentum::for_conditioning(smooth, inst.certified_lambda()), Momentum::Constant);
    let d = sim.dim();
    accelerated(
        sim,
        &mut rec,
        smooth,
        momentum,
        None,
        |_| false,
        |s, y| gradient_round(s, y, tie),
        vec![0.0; d],
    )?;
    Ok(rec.finish(sim))
}
