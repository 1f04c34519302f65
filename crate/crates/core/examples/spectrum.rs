//! Mercer eigenvalues of the PNN and MLP NTKs on the sphere and their decay slopes.
//!
//! `cargo run --release --example spectrum`

use polyntk::experiments::{run_spectrum, SpectrumConfig};

fn main() -> polyntk::Result<()> {
    let cfg = SpectrumConfig {
        ambient_dims: vec![4],
        ..Default::default()
    };
    let r = run_spectrum(&cfg)?;
    println!("kernel  D  slope   mu_2        mu_10       mu_40");
    for e in &r.entries {
        let mu = &e.estimate.mu;
        println!(
            "{}{:<3} {}  {:>6.3}  {:>10.3e}  {:>10.3e}  {:>10.3e}",
            e.family,
            e.n,
            e.ambient_dim,
            e.estimate.fitted_slope.unwrap_or(f64::NAN),
            mu[2],
            mu[10],
            mu[40]
        );
    }
    Ok(())
}
