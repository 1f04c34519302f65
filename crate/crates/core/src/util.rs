use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn check_dims(x: &[f64], xp: &[f64]) -> Result<()> {
    if x.len() != xp.len() {
        return Err(Error::Argument(format!(
            "input dimensions differ: {} vs {}",
            x.len(),
            xp.len()
        )));
    }
    Ok(())
}

/// Uniform draw from the unit sphere in `dim` variables.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Parses "1,0,-2.5" into a vector.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Argument(format!("bad vector component {s:?}: {e}")))
        })
        .collect()
}
