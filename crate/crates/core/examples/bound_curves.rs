// Closed-form bounds for one parameter tuple, then the measured subspace
// gap against its floor for an in-memory experiment config.

use std::error::Error;

use roundlab::bounds::{smooth_w_star_norm, BoundInputs, BoundReport};
use roundlab::experiment::{curve_rows, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let report = BoundReport::evaluate(BoundInputs {
        delta: 1.0,
        lambda: 0.1,
        eps: 1e-6,
        w_star_norm: smooth_w_star_norm(1.0, 0.1)?,
        d: 200,
        t: 10,
    });
    for (name, value) in &report.outputs {
        println!("{name:<24} {value:.6e}");
    }

    let cfg = ExperimentConfig::from_json(r#"{"family":"smooth","params":{"delta":1.0,"lambda":0.1,"d":48,"m":2}}"#)?;
    println!("T   measured       floor          ratio");
    for row in curve_rows(&cfg, 0, 12)? {
        println!(
            "{:<3} {:.6e}  {:.6e}  {:.4}",
            row.t,
            row.measured,
            row.curve.unwrap_or(f64::NAN),
            row.ratio().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
