//! Empirical NTK of a random finite-width PNN against the infinite-width limit.
//!
//! `cargo run --release --example finite_width`

use polyntk::kernels::theory_init_bound;
use polyntk::nets::empirical_ntk;
use polyntk::{sample_unit_sphere, ArchSpec, Family, KernelModel, NetParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> polyntk::Result<()> {
    let (degree, dim) = (2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inputs: Vec<Vec<f64>> = (0..4).map(|_| sample_unit_sphere(&mut rng, dim)).collect();
    let kernel = KernelModel::pnn(degree, dim)?;

    println!("width   max |K_hat - K|   bound (delta = 0.1)");
    for width in [64, 256, 1024, 4096, 16384] {
        let params = NetParams::init(&ArchSpec {
            family: Family::Pnn,
            degree,
            width,
            input_dim: dim,
            seed: 3,
        })?;
        let gram = empirical_ntk(&params, &inputs)?;
        let mut worst: f64 = 0.0;
        for i in 0..inputs.len() {
            for j in 0..inputs.len() {
                worst = worst.max((gram.entries[(i, j)] - kernel.eval(&inputs[i], &inputs[j])?).abs());
            }
        }
        let bound = theory_init_bound(degree, width, 0.1)?;
        println!("{width:>6}   {worst:>14.5}   {:>10.1}", bound.bound);
    }
    Ok(())
}
