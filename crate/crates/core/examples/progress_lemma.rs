// Support growth of DGD on the smooth pair: one new coordinate per round.

use std::error::Error;

use roundlab::instances::build_smooth_hard_pair;
use roundlab::oracle::Simulation;
use roundlab::solvers::{dgd, SolverConfig, SolverKind};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = build_smooth_hard_pair(0.5, 0.01, 64, 2)?;
    let mut sim = Simulation::new(&inst);
    let t = dgd(&mut sim, &SolverConfig::new(SolverKind::Dgd, f64::MIN_POSITIVE, 12))?;
    println!("round  support  T+1  suboptimality");
    for r in &t.records {
        println!("{:>5}  {:>7}  {:>3}  {:.6e}", r.round, r.support_max, r.round + 1, r.suboptimality);
        assert!(r.support_max <= r.round + 1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
