//! Distributed solvers expressed purely through oracle requests.
//!
//! Every solver drives one [`Simulation`], reports its current iterate after
//! each communication round, and stops once the suboptimality against the
//! instance's stored optimum drops to `eps` or the round budget runs out.

mod gradient;
mod one_shot;
mod precond_cg;
mod smoothing;

pub use gradient::{dagd, dgd};
pub use one_shot::one_shot_average;
pub use precond_cg::precond_cg;
pub use smoothing::{smoothed_dagd, subgradient_method};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{InstanceBundle, TieRule};
use crate::oracle::{OracleRequest, RoundRecord, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    OneShotAverage,
    Dgd,
    Dagd,
    SmoothedDagd,
    Subgradient,
    PrecondCg,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::OneShotAverage => "one_shot_average",
            SolverKind::Dgd => "dgd",
            SolverKind::Dagd => "dagd",
            SolverKind::SmoothedDagd => "smoothed_dagd",
            SolverKind::Subgradient => "subgradient",
            SolverKind::PrecondCg => "precond_cg",
        }
    }
}

fn default_eps() -> f64 {
    1e-6
}

fn default_max_rounds() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    /// Step size: `1/L` for gradient methods, `η₀` for the subgradient method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Fixed momentum for DAGD, overriding `(√κ−1)/(√κ+1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    /// Initial smoothing parameter; defaults to `eps/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    /// Kink rule `α` for subgradients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_alpha: Option<f64>,
    /// Shift `μ` of the local preconditioner; defaults to the instance's δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precond_shift: Option<f64>,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, eps: f64, max_rounds: usize) -> Self {
        SolverConfig {
            kind,
            eps,
            max_rounds,
            step: None,
            momentum: None,
            smoothing: None,
            tie_alpha: None,
            precond_shift: None,
        }
    }

    pub fn tie(&self) -> Result<TieRule> {
        self.tie_alpha.map_or(Ok(TieRule::MIDPOINT), TieRule::new)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => {
                    Err(Error::bad(format!("{name}={x} must be positive")))
                }
                _ => Ok(()),
            }
        };
        positive("eps", Some(self.eps))?;
        positive("step", self.step)?;
        positive("smoothing", self.smoothing)?;
        if let Some(b) = self.momentum {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::bad(format!("momentum={b} outside [0,1)")));
            }
        }
        if let Some(mu) = self.precond_shift {
            if !(mu >= 0.0) {
                return Err(Error::bad(format!("precond_shift={mu} must be non-negative")));
            }
        }
        self.tie()?;
        Ok(())
    }
}

/// State after one communication round (round 0 is the starting point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundStat {
    pub round: usize,
    pub value: f64,
    pub suboptimality: f64,
    pub best_suboptimality: f64,
    pub support_max: usize,
    pub broadcast_reals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub solver: SolverKind,
    pub records: Vec<RoundStat>,
    pub final_point: Vec<f64>,
    pub rounds_used: usize,
    /// `F(ŵ_j) − F*` for each machine's local output, when a solver has them.
    pub local_suboptimality: Vec<f64>,
    /// Smoothing parameters used, in order (smoothed solver only).
    pub smoothing_schedule: Vec<f64>,
    #[serde(skip)]
    pub oracle_records: Vec<RoundRecord>,
}

impl Transcript {
    /// First round whose iterate is within `eps` of optimal.
    pub fn rounds_to_eps(&self, eps: f64) -> Option<usize> {
        self.records.iter().find(|r| r.suboptimality <= eps).map(|r| r.round)
    }

    pub fn final_suboptimality(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.suboptimality)
    }

    /// Oracle transcript as JSON lines.
    pub fn oracle_jsonl(&self) -> String {
        self.oracle_records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serialization cannot fail") + "\n")
            .collect()
    }
}

/// Bookkeeping shared by all solvers.
pub(crate) struct Recorder {
    kind: SolverKind,
    eps: f64,
    max_rounds: usize,
    records: Vec<RoundStat>,
    point: Vec<f64>,
    best: f64,
    rising: usize,
    pub(crate) local_suboptimality: Vec<f64>,
    pub(crate) smoothing_schedule: Vec<f64>,
}

impl Recorder {
    pub(crate) fn start(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Recorder> {
        config.validate()?;
        let d = sim.dim();
        let x0 = vec![0.0; d];
        let value = sim.observe(sim.designated(), &x0)?;
        let sub = value - sim.instance().optimum_value;
        Ok(Recorder {
            kind: config.kind,
            eps: config.eps,
            max_rounds: config.max_rounds,
            records: vec![RoundStat {
                round: 0,
                value,
                suboptimality: sub,
                best_suboptimality: sub,
                support_max: 0,
                broadcast_reals: 0,
            }],
            point: x0,
            best: sub,
            rising: 0,
            local_suboptimality: Vec::new(),
            smoothing_schedule: Vec::new(),
        })
    }

    /// Whether another round may be spent.
    pub(crate) fn active(&self) -> bool {
        let last = self.records.last().expect("round 0 is always recorded");
        last.suboptimality > self.eps && last.round < self.max_rounds
    }

    pub(crate) fn last_round(&self) -> usize {
        self.records.last().map_or(0, |r| r.round)
    }

    pub(crate) fn best_suboptimality(&self) -> f64 {
        self.best
    }

    /// Records the designated machine's iterate after the latest round.
    /// A non-finite value is always an error; with `watch_divergence`, so
    /// are ten consecutive increases.
    pub(crate) fn record(&mut self, sim: &mut Simulation<'_>, x: &[f64], broadcast: usize, watch_divergence: bool) -> Result<()> {
        let value = sim.observe(sim.designated(), x)?;
        let sub = value - sim.instance().optimum_value;
        let prev = self.records.last().map_or(f64::INFINITY, |r| r.value);
        self.rising = if value > prev { self.rising + 1 } else { 0 };
        if !value.is_finite() || (watch_divergence && self.rising >= 10) {
            return Err(Error::Diverged { round: sim.round() });
        }
        self.best = self.best.min(sub);
        self.records.push(RoundStat {
            round: sim.round(),
            value,
            suboptimality: sub,
            best_suboptimality: self.best,
            support_max: sim.support_profile().into_iter().max().unwrap_or(0),
            broadcast_reals: broadcast,
        });
        self.point = x.to_vec();
        Ok(())
    }

    pub(crate) fn finish(self, sim: &Simulation<'_>) -> Transcript {
        Transcript {
            solver: self.kind,
            rounds_used: self.records.last().map_or(0, |r| r.round),
            records: self.records,
            final_point: self.point,
            local_suboptimality: self.local_suboptimality,
            smoothing_schedule: self.smoothing_schedule,
            oracle_records: sim.records().to_vec(),
        }
    }
}

/// Runs `per_machine` on every machine, communicates, and averages the
/// returned vectors (which must lie in the post-round span).
pub(crate) fn averaged_round(
    sim: &mut Simulation<'_>,
    mut per_machine: impl FnMut(&mut Simulation<'_>, usize) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, usize)> {
    let d = sim.dim();
    let m = sim.m();
    let mut acc = vec![0.0; d];
    for j in 0..m {
        let v = per_machine(sim, j)?;
        crate::numkit::axpy(1.0 / m as f64, &v, &mut acc);
    }
    let broadcast = sim.communicate();
    Ok((acc, broadcast))
}

/// Averaged local gradients at `x`, costing one round.
pub(crate) fn gradient_round(sim: &mut Simulation<'_>, x: &[f64], tie: TieRule) -> Result<(Vec<f64>, usize)> {
    averaged_round(sim, |s, j| s.local_compute(j, OracleRequest::subgradient(x, tie)))
}

/// Euclidean projection onto the ball of the given radius.
pub(crate) fn project_ball(x: &mut [f64], radius: f64) {
    let n = crate::numkit::norm(x);
    if n > radius {
        x.iter_mut().for_each(|v| *v *= radius / n);
    }
}

/// Dispatches on `config.kind`.
pub fn run_solver(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    match config.kind {
        SolverKind::OneShotAverage => one_shot_average(sim, config),
        SolverKind::Dgd => dgd(sim, config),
        SolverKind::Dagd => dagd(sim, config),
        SolverKind::SmoothedDagd => smoothed_dagd(sim, config),
        SolverKind::Subgradient => subgradient_method(sim, config),
        SolverKind::PrecondCg => precond_cg(sim, config),
    }
}

/// Runs the configured solver on a fresh simulation and returns the first
/// round reaching `config.eps`, if any.
pub fn rounds_to_eps(instance: &InstanceBundle, config: &SolverConfig) -> Result<Option<usize>> {
    let mut sim = Simulation::new(instance);
    let t = run_solver(&mut sim, config)?;
    Ok(t.rounds_to_eps(config.eps))
}
