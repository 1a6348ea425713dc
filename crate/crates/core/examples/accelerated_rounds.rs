// Rounds to ε for DGD, DAGD and preconditioned CG against the round lower bound.

use std::error::Error;

use roundlab::experiment::round_lower_bound;
use roundlab::instances::build_smooth_hard_pair;
use roundlab::solvers::{rounds_to_eps, SolverConfig, SolverKind};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = build_smooth_hard_pair(0.1, 0.01, 128, 2)?;
    println!("eps      bound  dgd   dagd  precond_cg");
    for eps in [1e-3, 1e-5, 1e-7] {
        let bound = round_lower_bound(&inst, eps)?.map_or("-".to_string(), |b| b.to_string());
        let mut row = format!("{eps:<8.0e} {bound:>5}");
        for kind in [SolverKind::Dgd, SolverKind::Dagd, SolverKind::PrecondCg] {
            let r = rounds_to_eps(&inst, &SolverConfig::new(kind, eps, 5000))?;
            row += &format!("  {:>4}", r.map_or("-".to_string(), |r| r.to_string()));
        }
        println!("{row}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
