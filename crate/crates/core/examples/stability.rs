//! Gradient descent on a finite PNN: loss envelope and NTK drift versus width.
//!
//! `cargo run --release --example stability`

use polyntk::experiments::{run_stability, StabilityConfig};

fn main() -> polyntk::Result<()> {
    let cfg = StabilityConfig {
        sweep_widths: vec![256, 1024],
        seeds: 2,
        steps: 200,
        ..Default::default()
    };
    let result = run_stability(&cfg, 0)?;
    println!("eta0 = {:.4}", result.eta0);
    println!("width  seed  envelope  sup drift  rel drift  total step");
    for run in &result.runs {
        let r = &run.report;
        println!(
            "{:>5}  {:>4}  {:>8}  {:>9.4}  {:>9.4}  {:>10.4}",
            run.width, run.seed_index, r.envelope_holds, r.sup_ntk_drift, r.rel_ntk_drift, r.total_step_norm
        );
    }
    Ok(())
}
