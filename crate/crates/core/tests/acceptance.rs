//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Grids for the solver sweeps live in `configs/`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roundlab::bounds::{nonsmooth_t0, subopt_curve_smooth, thm2_rounds};
use roundlab::experiment::{curve_rows, round_lower_bound, run_experiment, verify_checks, ExperimentConfig};
use roundlab::instances::{
    build_nonsmooth_hard_pair, build_one_round_pair, build_smooth_hard_pair, default_b, validate_bundle, zeta,
    InstanceBundle,
};
use roundlab::numkit::{norm, sub};
use roundlab::oracle::Simulation;
use roundlab::solvers::{run_solver, SolverConfig, SolverKind, Transcript};

type Outcome = Result<String, String>;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(inst: &InstanceBundle, cfg: &SolverConfig) -> Result<Transcript, String> {
    let mut sim = Simulation::new(inst);
    run_solver(&mut sim, cfg).map_err(|e| format!("{} failed: {e}", cfg.kind.name()))
}

/// Every machine's support within `E_{T+1}` after every round `T`.
fn support_excess(t: &Transcript) -> i64 {
    t.oracle_records
        .iter()
        .flat_map(|r| r.support_profile.iter().map(move |s| *s as i64 - (r.round as i64 + 1)))
        .max()
        .unwrap_or(0)
}

fn sweep(kind: SolverKind, rounds: usize) -> SolverConfig {
    SolverConfig::new(kind, f64::MIN_POSITIVE, rounds)
}

fn c1_progress_smooth() -> Outcome {
    let start = Instant::now();
    let inst = build_smooth_hard_pair(0.5, 0.01, 128, 2).map_err(|e| e.to_string())?;
    for kind in [SolverKind::Dgd, SolverKind::Dagd] {
        let t = run(&inst, &sweep(kind, 40))?;
        ensure(t.rounds_used == 40, || format!("{} stopped at {}", kind.name(), t.rounds_used))?;
        let ex = support_excess(&t);
        ensure(ex <= 0, || format!("{} support exceeds T+1 by {ex}", kind.name()))?;
        // Coordinates beyond T+1 of the final iterate are exactly below 1e-12.
        let tail = t.final_point[41..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ensure(tail < 1e-12, || format!("{} tail {tail:e}", kind.name()))?;
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(5), || format!("took {el:?}"))?;
    Ok(format!("dgd+dagd, 40 rounds, {el:.2?}"))
}

fn c2_progress_nonsmooth() -> Outcome {
    let start = Instant::now();
    let b = default_b(0.05, 18).map_err(|e| e.to_string())?;
    let inst = build_nonsmooth_hard_pair(0.05, 18, 64, b, 1.0, 2).map_err(|e| e.to_string())?;
    let mut runs = 0;
    for alpha in [0.0, 0.5, 1.0] {
        for kind in [SolverKind::SmoothedDagd, SolverKind::Subgradient] {
            let mut cfg = sweep(kind, 20);
            cfg.tie_alpha = Some(alpha);
            if kind == SolverKind::SmoothedDagd {
                cfg.eps = 1e-9;
                cfg.smoothing = Some(1e-4);
            }
            let t = run(&inst, &cfg)?;
            ensure(t.rounds_used == 20, || format!("{} alpha={alpha} stopped at {}", kind.name(), t.rounds_used))?;
            let ex = support_excess(&t);
            ensure(ex <= 0, || format!("{} alpha={alpha} support excess {ex}", kind.name()))?;
            runs += 1;
        }
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(5), || format!("took {el:?}"))?;
    Ok(format!("{runs} runs x 20 rounds, {el:.2?}"))
}

fn c3_smooth_dominance() -> Outcome {
    let cfg = config("smooth.json");
    let rows = curve_rows(&cfg, 0, 30).map_err(|e| e.to_string())?;
    let bad: Vec<_> = rows.iter().filter(|r| r.curve.is_none() || !r.dominates(1e-10)).collect();
    ensure(bad.is_empty(), || format!("lambda>0 violations {bad:?}"))?;
    let min_sc = rows.iter().filter_map(|r| r.ratio()).fold(f64::INFINITY, f64::min);

    let cfg0 = config("smooth_ridgeless.json");
    let rows0 = curve_rows(&cfg0, 0, 50).map_err(|e| e.to_string())?;
    let bad0: Vec<_> = rows0.iter().filter(|r| r.curve.is_none() || !r.dominates(1e-10)).collect();
    ensure(bad0.is_empty(), || format!("lambda=0 violations {bad0:?}"))?;
    let min_0 = rows0.iter().filter_map(|r| r.ratio()).fold(f64::INFINITY, f64::min);
    Ok(format!("31 + 51 rows, min ratios {min_sc:.4} and {min_0:.4}"))
}

fn c4_nonsmooth_dominance() -> Outcome {
    let lambda: f64 = 0.05;
    let t_lo = (1.0 / (2.0 * lambda)).ceil() as usize - 2;
    ensure(t_lo as f64 == nonsmooth_t0(lambda), || "grid start disagrees with T0".into())?;
    let cfg = config("nonsmooth.json");
    let rows = curve_rows(&cfg, t_lo, 40).map_err(|e| e.to_string())?;
    let bad: Vec<_> = rows
        .iter()
        .filter(|r| match r.curve {
            Some(c) => r.measured < c || (c - 1.0 / (16.0 * lambda * ((r.t + 2) as f64).powi(2))).abs() > 1e-15,
            None => true,
        })
        .collect();
    ensure(bad.is_empty(), || format!("violations {bad:?}"))?;
    let min = rows.iter().filter_map(|r| r.ratio()).fold(f64::INFINITY, f64::min);
    Ok(format!("T={t_lo}..40, {} rows, min ratio {min:.4}", rows.len()))
}

fn c5_zeta() -> Outcome {
    let (delta, lambda) = (1.0, 0.1);
    let inst = build_smooth_hard_pair(delta, lambda, 200, 2).map_err(|e| e.to_string())?;
    let z = zeta(delta, lambda).map_err(|e| e.to_string())?;
    let geo: Vec<f64> = (1..=200).map(|k| z.powi(k)).collect();
    let dev = norm(&sub(&inst.optimum, &geo));
    ensure(dev <= 1e-8, || format!("profile deviation {dev:e}"))?;
    let x = 2.0 + 4.0 * lambda / (delta * (1.0 - lambda));
    let quad = (z * z - x * z + 1.0).abs();
    ensure(quad <= 1e-12, || format!("quadratic residual {quad:e}"))?;
    let floor = (-2.0 / ((delta * (1.0 / lambda - 1.0) + 1.0).sqrt() - 1.0)).exp();
    ensure(z >= floor, || format!("zeta {z} below exponential floor {floor}"))?;
    Ok(format!("zeta={z:.12}, deviation {dev:.2e}, residual {quad:.1e}, floor {floor:.6}"))
}

fn rounds_of(points: &[roundlab::experiment::PointResult], point: usize, kind: SolverKind) -> Result<usize, String> {
    points[point]
        .summary
        .iter()
        .find(|r| r.solver == kind)
        .and_then(|r| r.rounds_to_eps)
        .ok_or_else(|| format!("{} did not reach eps at point {point}", kind.name()))
}

fn c6_upper_bound_scaling() -> Outcome {
    let start = Instant::now();
    let dagd = run_experiment(&config("scaling_dagd.json")).map_err(|e| e.to_string())?;
    let (r_hi, r_lo) = (rounds_of(&dagd, 0, SolverKind::Dagd)?, rounds_of(&dagd, 1, SolverKind::Dagd)?);
    let ratio = r_lo as f64 / r_hi as f64;
    ensure((5.0..=20.0).contains(&ratio), || format!("dagd ratio {ratio} ({r_lo}/{r_hi})"))?;

    let pcg = run_experiment(&config("scaling_pcg.json")).map_err(|e| e.to_string())?;
    let p0 = rounds_of(&pcg, 0, SolverKind::PrecondCg)?;
    let a0 = rounds_of(&pcg, 0, SolverKind::Dagd)?;
    ensure(2 * p0 <= a0, || format!("pcg {p0} vs dagd {a0}"))?;
    let p1 = rounds_of(&pcg, 1, SolverKind::PrecondCg)?;
    let growth = p1 as f64 / p0 as f64;
    ensure((1.4..=3.0).contains(&growth), || format!("pcg growth {growth} ({p1}/{p0})"))?;
    let el = start.elapsed();
    ensure(el < Duration::from_secs(60), || format!("took {el:?}"))?;
    Ok(format!(
        "dagd {r_lo}/{r_hi}={ratio:.2}; pcg {p0} vs dagd {a0}; pcg growth {p1}/{p0}={growth:.2}; {el:.2?}"
    ))
}

fn c7_one_round() -> Outcome {
    let (d, delta, lambda) = (64, 0.3, 0.1);
    let ceiling = 81.0 * delta * delta / (8.0 * lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut draws = 0;
    for seed in 0..20u64 {
        let j = rng.random_range(32..=64);
        let (inst, sample) = build_one_round_pair(delta, lambda, d, j, 2, seed).map_err(|e| e.to_string())?;
        draws += sample.draws;
        for c in validate_bundle(&inst).map_err(|e| e.to_string())? {
            ensure(c.passed, || format!("seed {seed} j={j}: {}", c.line()))?;
        }
        let res = inst.optimum_residual().map_err(|e| e.to_string())?;
        ensure(res <= 1e-10, || format!("seed {seed}: residual {res:e}"))?;
        let t = run(&inst, &SolverConfig::new(SolverKind::OneShotAverage, 1e-12, 1))?;
        let worst = t.local_suboptimality.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure(t.local_suboptimality.len() == 2 && worst <= ceiling, || {
            format!("seed {seed}: local gap {worst} vs {ceiling}")
        })?;
    }
    let rate = 20.0 / draws as f64;
    ensure(rate >= 0.9, || format!("acceptance rate {rate}"))?;
    Ok(format!("20 instances, sampler acceptance {rate:.3}"))
}

#[derive(Default)]
struct BoundTally {
    rows: usize,
    reached: usize,
    violations: Vec<String>,
}

impl BoundTally {
    fn add(&mut self, label: String, measured: Option<usize>, bound: usize, max_rounds: usize) {
        self.rows += 1;
        match measured {
            Some(m) => {
                self.reached += 1;
                if m < bound {
                    self.violations.push(format!("{label}: {m} < {bound}"));
                }
            }
            None if max_rounds < bound => self.violations.push(format!("{label}: cap {max_rounds} < {bound}")),
            None => {}
        }
    }
}

fn c8_lower_bounds() -> Outcome {
    let mut tally = BoundTally::default();

    // Smooth, λ > 0: the configured sweep.
    let cfg = config("lower_bounds_smooth.json");
    let caps: Vec<usize> = cfg.solvers.iter().map(|s| s.max_rounds).collect();
    for p in run_experiment(&cfg).map_err(|e| e.to_string())? {
        for r in &p.summary {
            let cap = caps[cfg.solvers.iter().position(|s| s.kind == r.solver).unwrap_or(0)];
            if let Some(b) = r.lower_bound {
                tally.add(format!("smooth lambda={} {} eps={:e}", r.params.lambda, r.solver.name(), r.eps), r.rounds_to_eps, b, cap);
            }
        }
    }

    // Smooth, λ = 0: dimension-matched instances, ε just below the floor.
    for t in [3usize, 8, 15] {
        let d = 2 * t + 3;
        let inst = build_smooth_hard_pair(1.0, 0.0, d, 2).map_err(|e| e.to_string())?;
        let eps = 0.99 * subopt_curve_smooth(t, 1.0, 0.0, d, norm(&inst.optimum)).map_err(|e| e.to_string())?;
        let b = round_lower_bound(&inst, eps).map_err(|e| e.to_string())?.ok_or(format!("no bound at T={t}"))?;
        for kind in [SolverKind::Dgd, SolverKind::Dagd] {
            let cfg = SolverConfig::new(kind, eps, 20_000);
            let tr = run(&inst, &cfg)?;
            tally.add(format!("smooth lambda=0 d={d} {}", kind.name()), tr.rounds_to_eps(eps), b, cfg.max_rounds);
        }
    }

    // Non-smooth: chain length k = ⌈bound⌉ + 1 per ε.
    for (lambda, eps_grid) in [(0.05, [1e-2, 5e-3, 2.5e-3]), (0.0, [2e-2, 1e-2, 5e-3])] {
        for eps in eps_grid {
            let rb = thm2_rounds(lambda, eps).map_err(|e| e.to_string())?;
            let r = rb.value.max(0.0).ceil() as usize;
            let t0 = if lambda > 0.0 { nonsmooth_t0(lambda) as usize } else { 0 };
            let t = r.saturating_sub(1).max(t0);
            let cfg = ExperimentConfig::from_json(&format!(
                r#"{{"family":"nonsmooth","params":{{"lambda":{lambda},"d":{},"m":2,"T":{t}}}}}"#,
                t + 4
            ))
            .map_err(|e| e.to_string())?;
            let inst = cfg.base_instance().map_err(|e| e.to_string())?;
            let Some(b) = round_lower_bound(&inst, eps).map_err(|e| e.to_string())? else {
                return Err(format!("no bound for lambda={lambda} eps={eps}"));
            };
            for kind in [SolverKind::SmoothedDagd, SolverKind::Subgradient] {
                let cfg = SolverConfig::new(kind, eps, 4000);
                let tr = run(&inst, &cfg)?;
                tally.add(format!("nonsmooth lambda={lambda} eps={eps:e} {}", kind.name()), tr.rounds_to_eps(eps), b, cfg.max_rounds);
            }
        }
    }

    ensure(tally.violations.is_empty(), || tally.violations.join("; "))?;
    ensure(tally.reached * 2 >= tally.rows, || format!("only {}/{} rows reached eps", tally.reached, tally.rows))?;
    Ok(format!("{} (solver, instance, eps) rows, {} reached eps, 0 violations", tally.rows, tally.reached))
}

fn c9_determinism() -> Outcome {
    let names = ["smooth.json", "smooth_ridgeless.json", "nonsmooth.json", "one_round.json"];
    let report = || -> Result<String, String> {
        let mut out = String::new();
        for n in names {
            let checks = verify_checks(&config(n)).map_err(|e| format!("{n}: {e}"))?;
            for c in checks {
                out.push_str(&format!("{n} {}\n", c.line()));
            }
        }
        Ok(out)
    };
    let (a, b) = (report()?, report()?);
    ensure(a == b, || "verify reports differ between runs".into())?;
    let failed: Vec<&str> = a.lines().filter(|l| l.contains(": FAIL")).collect();
    ensure(failed.is_empty(), || failed.join("; "))?;
    ensure(!a.contains("assumption violation"), || "assumption violation reported".into())?;
    Ok(format!("{} checks, identical across two runs, all PASS", a.lines().count()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("progress lemma, smooth", c1_progress_smooth),
        ("progress lemma, non-smooth", c2_progress_nonsmooth),
        ("curve dominance, smooth", c3_smooth_dominance),
        ("curve dominance, non-smooth", c4_nonsmooth_dominance),
        ("zeta consistency", c5_zeta),
        ("upper-bound scaling", c6_upper_bound_scaling),
        ("one-round construction", c7_one_round),
        ("lower-bound non-violation", c8_lower_bounds),
        ("determinism and model soundness", c9_determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS ({detail})", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} ({name}): FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {}/9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
