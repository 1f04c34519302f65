//! PNN versus MLP kernel regression along a ray leaving the training range.
//!
//! `cargo run --release --example extrapolation`

use polyntk::experiments::{run_extrapolation, ExtrapolationConfig, Target};

fn main() -> polyntk::Result<()> {
    for target in [Target::Poly3, Target::Cos2x] {
        let cfg = ExtrapolationConfig {
            target,
            ..Default::default()
        };
        let r = run_extrapolation(&cfg, 0)?;
        println!(
            "{target:?}: best ray degree PNN {:?} MLP {:?}",
            r.pnn_fit.best_degree, r.mlp_fit.best_degree
        );
        for i in (0..r.h.len()).step_by(10) {
            println!(
                "  h {:>5.2}  pnn {:>9.4}  mlp {:>9.4}  target {:>9.4}",
                r.h[i], r.f_pnn[i], r.f_mlp[i], r.target[i]
            );
        }
    }
    Ok(())
}
