// Smoothed accelerated gradient against the raw subgradient method on the
// non-smooth pair, measured on the true objective.

use std::error::Error;

use roundlab::instances::{build_nonsmooth_hard_pair, default_b};
use roundlab::oracle::Simulation;
use roundlab::solvers::{smoothed_dagd, subgradient_method, SolverConfig, SolverKind};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = build_nonsmooth_hard_pair(0.05, 18, 32, default_b(0.05, 18)?, 1.0, 2)?;
    let eps = 1e-4;
    let mut sim = Simulation::new(&inst);
    let s = smoothed_dagd(&mut sim, &SolverConfig::new(SolverKind::SmoothedDagd, eps, 20_000))?;
    println!(
        "smoothed_dagd: {} rounds, gap {:.3e}, smoothing levels {:?}",
        s.rounds_used,
        s.final_suboptimality(),
        s.smoothing_schedule
    );
    let mut sim = Simulation::new(&inst);
    let mut cfg = SolverConfig::new(SolverKind::Subgradient, eps, 2000);
    cfg.tie_alpha = Some(1.0);
    let g = subgradient_method(&mut sim, &cfg)?;
    println!("subgradient:   {} rounds, gap {:.3e}", g.rounds_used, g.final_suboptimality());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
