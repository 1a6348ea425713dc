// Drives the span oracle by hand: legal requests succeed, a point outside
// the known span is rejected, and each round is logged.

use std::error::Error;

use roundlab::instances::{build_smooth_hard_pair, TieRule};
use roundlab::numkit::unit;
use roundlab::oracle::{OracleRequest, Primitive, Simulation};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let inst = build_smooth_hard_pair(1.0, 0.1, 16, 2)?;
    let mut sim = Simulation::new(&inst);
    let zero = vec![0.0; 16];

    // Round 1: both machines evaluate their gradient at the origin.
    for j in 0..sim.m() {
        let g = sim.local_compute(j, OracleRequest::gradient(&zero))?;
        println!("machine {j} gradient support: {}", roundlab::numkit::support_max(&g, 0.0));
    }
    let sent = sim.communicate();
    println!("round {} broadcast {sent} reals, supports {:?}", sim.round(), sim.support_profile());

    // A point on the fifth coordinate is not derivable yet.
    let bogus = OracleRequest::RawSpanPoint {
        rhs: vec![(1.0, Primitive::Point(unit(16, 4)))],
        tie: TieRule::MIDPOINT,
    };
    match sim.local_compute(0, bogus) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }

    // Exact local minimizer and a shifted Hessian solve are both legal.
    let w = sim.local_compute(1, OracleRequest::local_minimizer())?;
    let h = sim.local_compute(1, OracleRequest::hessian_solve(&zero, &vec![0.5; 16], &w))?;
    println!("local minimizer norm {:.4}, solve norm {:.4}", roundlab::numkit::norm(&w), roundlab::numkit::norm(&h));
    sim.communicate();
    print!("{}", sim.transcript_jsonl());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
