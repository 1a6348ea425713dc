// Builds the three hard pairs and prints their validator summaries.

use std::error::Error;

use roundlab::instances::{build_nonsmooth_hard_pair, build_one_round_pair, build_smooth_hard_pair, default_b, validate_bundle};
use roundlab::numkit::norm;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let smooth = build_smooth_hard_pair(1.0, 0.1, 64, 2)?;
    let nonsmooth = build_nonsmooth_hard_pair(0.05, 18, 32, default_b(0.05, 18)?, 1.0, 2)?;
    let (one_round, sample) = build_one_round_pair(0.3, 0.1, 32, 20, 2, 42)?;
    println!("one-round sign matrix accepted after {} draw(s)", sample.draws);

    for inst in [&smooth, &nonsmooth, &one_round] {
        println!(
            "{} pair: d={}, m={}, F*={:.6e}, |w*|={:.4}",
            inst.family.name(),
            inst.dim(),
            inst.m(),
            inst.optimum_value,
            norm(&inst.optimum)
        );
        for check in validate_bundle(inst)? {
            println!("  {}", check.line());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
