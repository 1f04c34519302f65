//! SGD on a spherical-harmonic mixture: how fast each frequency leaves the residual.
//!
//! `cargo run --release --example spectral_bias -- [iterations]`

use polyntk::experiments::{run_spectral_bias, SpectralBiasConfig};

fn main() -> polyntk::Result<()> {
    let iterations = std::env::args()
        .nth(1)
        .map_or(Ok(1000), |s| s.parse())
        .map_err(|e| polyntk::Error::Argument(format!("{e}")))?;
    let cfg = SpectralBiasConfig {
        iterations,
        seeds: 1,
        orders: vec![3, 6],
        ..Default::default()
    };
    let r = run_spectral_bias(&cfg, 0)?;
    println!("harmonics {:?}", r.harmonics);
    for n in &cfg.orders {
        let fmt = |v: Vec<f64>| v.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ");
        println!("N = {n}  normalized area {}", fmt(r.mean_normalized_areas(*n)));
        println!("       final / initial   {}", fmt(r.mean_decay_ratios(*n)));
    }
    Ok(())
}
