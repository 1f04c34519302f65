//! Min-norm kernel regression with the PNN NTK, including a CSV round trip.
//!
//! `cargo run --release --example regression`

use polyntk::regression::{assemble_gram, fit, spectrum_bounds};
use polyntk::{Dataset, KernelModel};

fn main() -> polyntk::Result<()> {
    let x: Vec<Vec<f64>> = (0..12).map(|i| vec![-1.0 + 2.0 * i as f64 / 11.0, 1.0]).collect();
    let y = x.iter().map(|p| p[0] * p[0] * p[0] - 0.5 * p[0]).collect();
    let data = Dataset::new(x, y)?;

    let dir = tempfile::tempdir().map_err(|e| polyntk::Error::Numerical(e.to_string()))?;
    let path = dir.path().join("train.csv");
    data.write_csv(&path)?;
    let data = Dataset::read_csv(&path)?;

    for degree in [2, 3, 4] {
        let kernel = KernelModel::pnn(degree, 2)?;
        let (lo, hi) = spectrum_bounds(&assemble_gram(&kernel, &data.x)?);
        let model = fit(&kernel, &data, 0.0)?;
        print!("N = {degree}  cond {:>9.2e}  f(t, 1) at t = 2, 3:", hi / lo);
        for t in [2.0, 3.0] {
            print!(
                "  {:>8.3} (target {:>6.2})",
                model.predict(&[t, 1.0])?,
                t * t * t - 0.5 * t
            );
        }
        println!();
    }
    Ok(())
}
