//! Quadratic targets are recovered far outside the training set when the
//! training inputs contain the coordinate axes.
//!
//! `cargo run --release --example exact_extrapolation`

use polyntk::experiments::{run_exact_extrapolation, ExactExtrapolationConfig};

fn main() -> polyntk::Result<()> {
    let r = run_exact_extrapolation(&ExactExtrapolationConfig::default(), 0)?;
    println!("median relative error, axes included: {:.4}", r.median_rel_err);
    if let Some(e) = r.ablation_median_rel_err {
        println!("median relative error, positive orthant only: {e:.4}");
    }
    Ok(())
}
