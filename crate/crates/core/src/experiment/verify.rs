use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{curve_rows, run_experiment, write_file, ExpResult, ExperimentConfig, JobOutput};
use crate::instances::{validate_bundle, zeta, Check, Family, InstanceBundle};
use crate::numkit::{norm, sub};
use crate::oracle::Simulation;
use crate::solvers::{run_solver, SolverConfig, SolverKind, Transcript};

type Task<'a> = Box<dyn Fn() -> Vec<Check> + Send + Sync + 'a>;

fn run_for(inst: &InstanceBundle, cfg: &SolverConfig) -> crate::Result<Transcript> {
    let mut sim = Simulation::new(inst);
    run_solver(&mut sim, cfg)
}

/// Every machine's support stays within `E_{T+1}` after every round `T`.
fn progress_check(name: &str, inst: &InstanceBundle, solver: SolverConfig) -> Check {
    match run_for(inst, &solver) {
        Err(e) => Check::new(name, false, e.to_string()),
        Ok(t) => {
            let worst = t
                .oracle_records
                .iter()
                .flat_map(|r| r.support_profile.iter().map(move |s| *s as i64 - (r.round as i64 + 1)))
                .max()
                .unwrap_or(i64::MIN);
            Check::new(
                name,
                worst <= 0,
                format!("{} rounds, max support excess {}", t.rounds_used, worst.max(0)),
            )
        }
    }
}

fn sweep_solver(kind: SolverKind, rounds: usize) -> SolverConfig {
    SolverConfig::new(kind, f64::MIN_POSITIVE, rounds)
}

fn zeta_check(inst: &InstanceBundle) -> Check {
    let p = &inst.params;
    let out = zeta(p.delta, p.lambda).map(|z| {
        let d = inst.dim();
        let geo: Vec<f64> = (1..=d as i32).map(|k| z.powi(k)).collect();
        let dev = norm(&sub(&inst.optimum, &geo));
        let tol = (10.0 * z.powi(d as i32) * norm(&geo)).max(1e-8);
        let quad = (z * z - 2.0 * (1.0 + 2.0 * p.lambda / (p.delta * (1.0 - p.lambda))) * z + 1.0).abs();
        (dev <= tol && quad <= 1e-12, format!("deviation {dev:.3e} (tol {tol:.1e}), root residual {quad:.1e}"))
    });
    match out {
        Ok((ok, detail)) => Check::new("zeta_profile", ok, detail),
        Err(e) => Check::new("zeta_profile", false, e.to_string()),
    }
}

fn dominance_check(cfg: &ExperimentConfig) -> Check {
    let grid = cfg.verify.curve.clone().unwrap_or_else(|| cfg.curve.clone());
    match curve_rows(cfg, grid.t_min, grid.t_max) {
        Err(e) => Check::new("bound_dominance", false, e.to_string()),
        Ok(rows) => {
            let in_regime = rows.iter().filter(|r| r.curve.is_some()).count();
            let violations = rows.iter().filter(|r| !r.dominates(1e-10)).count();
            let min_ratio = rows.iter().filter_map(|r| r.ratio()).fold(f64::INFINITY, f64::min);
            Check::new(
                "bound_dominance",
                violations == 0 && in_regime > 0,
                format!(
                    "T={}..{}: {in_regime} rows in regime, {violations} violations, min ratio {min_ratio:.6}",
                    grid.t_min, grid.t_max
                ),
            )
        }
    }
}

fn lower_bound_check(cfg: &ExperimentConfig) -> Check {
    let name = "lower_bound_nonviolation";
    match run_experiment(cfg) {
        Err(e) => Check::new(name, false, e.to_string()),
        Ok(points) => {
            let rows: Vec<_> = points.iter().flat_map(|p| &p.summary).collect();
            let bounded: Vec<_> = rows.iter().filter(|r| r.lower_bound.is_some()).collect();
            let violations: Vec<String> = bounded
                .iter()
                .filter(|r| r.rounds_to_eps.is_some_and(|m| m < r.lower_bound.unwrap_or(0)))
                .map(|r| format!("point {} {} eps={:e}", r.point, r.solver.name(), r.eps))
                .collect();
            Check::new(
                name,
                violations.is_empty(),
                format!(
                    "{} rows, {} with a bound, violations [{}]",
                    rows.len(),
                    bounded.len(),
                    violations.join("; ")
                ),
            )
        }
    }
}

fn ceiling_checks(inst: &InstanceBundle) -> Vec<Check> {
    let p = &inst.params;
    let ceiling = 81.0 * p.delta * p.delta / (8.0 * p.lambda);
    match run_for(inst, &SolverConfig::new(SolverKind::OneShotAverage, f64::MIN_POSITIVE, 1)) {
        Err(e) => vec![Check::new("trivial_ceiling", false, e.to_string())],
        Ok(t) => {
            let worst = t.local_suboptimality.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![
                Check::new(
                    "trivial_ceiling",
                    worst <= ceiling * (1.0 + 1e-12),
                    format!("worst local minimizer gap {worst:.6e} vs {ceiling:.6e}"),
                ),
                Check::new(
                    "one_shot_single_round",
                    t.rounds_used == 1 && t.final_suboptimality() <= ceiling * (1.0 + 1e-12),
                    format!("{} rounds, averaged gap {:.6e}", t.rounds_used, t.final_suboptimality()),
                ),
            ]
        }
    }
}

/// The invariant battery for the configured family, in a fixed order.
pub fn verify_checks(cfg: &ExperimentConfig) -> ExpResult<Vec<Check>> {
    let inst = cfg.base_instance()?;
    let inst = &inst;
    let rounds = cfg.verify.progress_rounds.min(inst.dim().saturating_sub(1)).max(1);
    let mut tasks: Vec<Task> = vec![Box::new(move || validate_bundle(inst).unwrap_or_else(|e| vec![Check::new("structure", false, e.to_string())]))];
    match inst.family {
        Family::Smooth => {
            if inst.params.lambda > 0.0 {
                tasks.push(Box::new(move || vec![zeta_check(inst)]));
            }
            for kind in [SolverKind::Dgd, SolverKind::Dagd, SolverKind::PrecondCg] {
                tasks.push(Box::new(move || {
                    vec![progress_check(&format!("progress_{}", kind.name()), inst, sweep_solver(kind, rounds))]
                }));
            }
            tasks.push(Box::new(move || vec![dominance_check(cfg)]));
        }
        Family::Nonsmooth => {
            for &alpha in &cfg.verify.tie_alphas {
                tasks.push(Box::new(move || {
                    let mut s = sweep_solver(SolverKind::Subgradient, rounds);
                    s.tie_alpha = Some(alpha);
                    vec![progress_check(&format!("progress_subgradient_alpha={alpha}"), inst, s)]
                }));
            }
            tasks.push(Box::new(move || {
                let mut s = sweep_solver(SolverKind::SmoothedDagd, rounds);
                s.eps = 1e-9;
                s.smoothing = Some(1e-4);
                vec![progress_check("progress_smoothed_dagd", inst, s)]
            }));
            tasks.push(Box::new(move || vec![dominance_check(cfg)]));
        }
        Family::OneRound => tasks.push(Box::new(move || ceiling_checks(inst))),
    }
    if !cfg.solvers.is_empty() && !cfg.eps_grid.is_empty() {
        tasks.push(Box::new(move || vec![lower_bound_check(cfg)]));
    }
    Ok(tasks.par_iter().map(|t| t()).collect::<Vec<_>>().concat())
}

/// The `verify` job: prints one PASS/FAIL line per check and writes the
/// same report to disk. Failed check names are returned in `failed`.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> ExpResult<JobOutput> {
    let checks = verify_checks(cfg)?;
    let report: String = checks.iter().map(|c| c.line() + "\n").collect();
    let path: PathBuf = write_file(out, &cfg.output.report, &report)?;
    Ok(JobOutput {
        stdout: report,
        files: vec![path],
        failed: checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect(),
    })
}
