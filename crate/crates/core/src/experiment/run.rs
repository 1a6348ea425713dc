use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{build_instance, fmt_f64, round_lower_bound, write_file, ExpResult, ExperimentConfig, ExperimentError, JobOutput};
use crate::instances::{InstanceBundle, InstanceParams};
use crate::oracle::Simulation;
use crate::solvers::{run_solver, SolverConfig, SolverKind, Transcript};

pub const ROUNDS_HEADER: &str = "round,solver,suboptimality,support_max,broadcast_reals";
pub const SUMMARY_HEADER: &str = "point,delta,lambda,d,solver,eps,rounds_to_eps,lower_bound";

/// One `(grid point, solver, ε)` entry. `rounds_to_eps` is `None` when the
/// run ended at `max_rounds` first; `lower_bound` is `None` where no theorem
/// bound applies to the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub point: usize,
    pub params: InstanceParams,
    pub solver: SolverKind,
    pub eps: f64,
    pub rounds_to_eps: Option<usize>,
    pub lower_bound: Option<usize>,
}

impl SummaryRow {
    fn csv(&self) -> String {
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.point,
            fmt_f64(self.params.delta),
            fmt_f64(self.params.lambda),
            self.params.d,
            self.solver.name(),
            fmt_f64(self.eps),
            opt(self.rounds_to_eps),
            opt(self.lower_bound)
        )
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub params: InstanceParams,
    pub transcripts: Vec<Transcript>,
    pub summary: Vec<SummaryRow>,
}

fn eps_list(cfg: &ExperimentConfig, solver: &SolverConfig) -> Vec<f64> {
    if cfg.eps_grid.is_empty() {
        vec![solver.eps]
    } else {
        cfg.eps_grid.clone()
    }
}

/// Runs every configured solver on every grid point. Each run targets the
/// smallest ε it is asked about, so one transcript answers the whole grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExpResult<Vec<PointResult>> {
    if cfg.solvers.is_empty() {
        return Err(ExperimentError::Config("run needs at least one solver".into()));
    }
    if cfg.instance.is_some() && !cfg.sweep.is_empty() {
        return Err(ExperimentError::Config("sweep cannot be combined with an instance file".into()));
    }
    let grid = cfg.grid();
    let instances: Vec<InstanceBundle> = if cfg.instance.is_some() {
        vec![cfg.base_instance()?]
    } else {
        let built: Vec<_> = grid.par_iter().map(|p| build_instance(cfg.family, p, cfg.seed)).collect();
        built.into_iter().collect::<crate::Result<_>>()?
    };

    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|p| (0..cfg.solvers.len()).map(move |s| (p, s)))
        .collect();
    let runs: Vec<crate::Result<Transcript>> = jobs
        .par_iter()
        .map(|&(p, s)| {
            let mut solver = cfg.solvers[s].clone();
            solver.eps = eps_list(cfg, &solver).into_iter().fold(solver.eps, f64::min);
            let mut sim = Simulation::new(&instances[p]);
            run_solver(&mut sim, &solver)
        })
        .collect();

    let mut runs = runs.into_iter();
    let mut out = Vec::with_capacity(instances.len());
    for (p, inst) in instances.iter().enumerate() {
        let mut transcripts = Vec::with_capacity(cfg.solvers.len());
        let mut summary = Vec::new();
        for solver in &cfg.solvers {
            let t = runs.next().expect("one run per job")?;
            for eps in eps_list(cfg, solver) {
                summary.push(SummaryRow {
                    point: p,
                    params: inst.params.clone(),
                    solver: solver.kind,
                    eps,
                    rounds_to_eps: t.rounds_to_eps(eps),
                    lower_bound: round_lower_bound(inst, eps)?,
                });
            }
            transcripts.push(t);
        }
        out.push(PointResult {
            params: inst.params.clone(),
            transcripts,
            summary,
        });
    }
    Ok(out)
}

/// `rounds.csv` → `rounds_p3.csv` for grid point 3 of a sweep.
fn point_name(name: &str, point: usize, points: usize) -> String {
    if points == 1 {
        return name.to_string();
    }
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_p{point}.{ext}"),
        None => format!("{name}_p{point}"),
    }
}

pub(crate) fn rounds_csv(transcripts: &[Transcript]) -> String {
    let mut s = String::from(ROUNDS_HEADER);
    s.push('\n');
    for t in transcripts {
        for r in &t.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.round,
                t.solver.name(),
                fmt_f64(r.suboptimality),
                r.support_max,
                r.broadcast_reals
            );
        }
    }
    s
}

fn transcript_jsonl(transcripts: &[Transcript]) -> String {
    let mut s = String::new();
    for t in transcripts {
        for r in &t.oracle_records {
            let mut v = serde_json::to_value(r).expect("record serialization cannot fail");
            v.as_object_mut()
                .expect("record is an object")
                .insert("solver".into(), t.solver.name().into());
            s.push_str(&v.to_string());
            s.push('\n');
        }
    }
    s
}

/// The `run` job: per-round CSV and transcript per grid point, plus one
/// summary CSV. Returns the text printed to standard output.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> ExpResult<JobOutput> {
    let results = run_experiment(cfg)?;
    let n = results.len();
    let mut files = Vec::new();
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut stdout = String::new();
    for (p, res) in results.iter().enumerate() {
        files.push(write_file(out, &point_name(&cfg.output.rounds, p, n), &rounds_csv(&res.transcripts))?);
        files.push(write_file(
            out,
            &point_name(&cfg.output.transcript, p, n),
            &transcript_jsonl(&res.transcripts),
        )?);
        for row in &res.summary {
            summary.push_str(&row.csv());
            summary.push('\n');
            let _ = writeln!(
                stdout,
                "point {p} {}: eps={} rounds={} lower_bound={}",
                row.solver.name(),
                fmt_f64(row.eps),
                row.rounds_to_eps.map_or("-".into(), |r| r.to_string()),
                row.lower_bound.map_or("-".into(), |r| r.to_string()),
            );
        }
    }
    files.push(write_file(out, &cfg.output.summary, &summary)?);
    Ok(JobOutput { stdout, files, failed: Vec::new() })
}
