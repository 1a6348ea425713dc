// A λ sweep through the experiment layer: measured rounds next to the
// theorem bound for each grid point.

use std::error::Error;

use roundlab::experiment::{run_experiment, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "family": "smooth",
            "params": { "delta": 1.0, "lambda": 0.1, "d": 128, "m": 2 },
            "solvers": [ { "kind": "dagd", "max_rounds": 3000 } ],
            "eps_grid": [1e-4, 1e-8],
            "sweep": [ { "lambda": 0.1 }, { "lambda": 0.01 }, { "lambda": 0.001 } ]
        }"#,
    )?;
    for point in run_experiment(&cfg)? {
        for row in &point.summary {
            println!(
                "lambda={:<6} eps={:<6.0e} rounds={:<5} bound={}",
                row.params.lambda,
                row.eps,
                row.rounds_to_eps.map_or("-".into(), |r| r.to_string()),
                row.lower_bound.map_or("-".into(), |r| r.to_string())
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
