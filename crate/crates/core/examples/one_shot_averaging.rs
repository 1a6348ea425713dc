// One-shot averaging on seeded one-round pairs versus the trivial ceiling.

use std::error::Error;

use roundlab::bounds::thm3_levels;
use roundlab::instances::build_one_round_pair;
use roundlab::oracle::Simulation;
use roundlab::solvers::{one_shot_average, SolverConfig, SolverKind};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (delta, lambda) = (0.3, 0.1);
    let levels = thm3_levels(delta, lambda)?;
    println!("ceiling 81d^2/(8l) = {:.4}, lower-bound scale d^2/l = {:.4}", levels.trivial_upper, levels.lb_scale);
    for seed in 0..5 {
        let (inst, _) = build_one_round_pair(delta, lambda, 32, 16 + seed as usize, 2, seed)?;
        let mut sim = Simulation::new(&inst);
        let t = one_shot_average(&mut sim, &SolverConfig::new(SolverKind::OneShotAverage, 1e-12, 1))?;
        println!(
            "seed {seed}: local gaps {:?}, averaged gap {:.4e}",
            t.local_suboptimality.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>(),
            t.final_suboptimality()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
