use super::{averaged_round, Recorder, SolverConfig, Transcript};
use crate::error::Result;
use crate::oracle::{OracleRequest, Simulation};

/// Each machine minimizes its own local function exactly, then a single
/// round averages the minimizers.
pub fn one_shot_average(sim: &mut Simulation<'_>, config: &SolverConfig) -> Result<Transcript> {
    let mut rec = Recorder::start(sim, config)?;
    let inst = sim.instance();
    let mut locals = Vec::with_capacity(sim.m());
    let (avg, bc) = averaged_round(sim, |s, j| {
        let w = s.local_compute(j, OracleRequest::local_minimizer())?;
        locals.push(inst.suboptimality(&w));
        Ok(w)
    })?;
    rec.local_suboptimality = locals;
    rec.record(sim, &avg, bc, false)?;
    Ok(rec.finish(sim))
}
