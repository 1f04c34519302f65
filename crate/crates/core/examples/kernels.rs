//! Closed-form NTKs and their Monte-Carlo cross-check.
//!
//! `cargo run --release --example kernels`

use polyntk::kernels::{mc_kappas, Kappa};
use polyntk::{Family, KernelModel};

fn main() -> polyntk::Result<()> {
    let x = [0.6, 0.8];
    let xp = [1.0, 0.0];

    println!("K(x, x') at x = {x:?}, x' = {xp:?}");
    for (family, n) in [
        (Family::Pnn, 2),
        (Family::Pnn, 3),
        (Family::Pnn, 6),
        (Family::Mlp, 2),
        (Family::Mlp, 4),
        (Family::Mfn, 2),
    ] {
        let k = KernelModel::new(family, n, 2)?;
        println!(
            "  {family}{n:<3} {:>10.6}   diag {:>8.4}",
            k.eval(&x, &xp)?,
            k.eval(&x, &x)?
        );
    }

    let est = mc_kappas(&x, &xp, 1 << 20, 7)?;
    println!("\nkappa        closed      mc          3 s.e.");
    for (kappa, e) in [Kappa::One, Kappa::Two, Kappa::Three, Kappa::Four].into_iter().zip(est) {
        println!(
            "  {:<6} {:>10.6}  {:>10.6}  {:>8.1e}",
            format!("{kappa:?}"),
            kappa.closed_form(&x, &xp)?,
            e.value,
            3.0 * e.std_error
        );
    }
    Ok(())
}
