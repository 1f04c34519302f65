//! Deterministic Monte-Carlo estimation.
//!
//! The sample budget is split into fixed-size chunks. Chunk `c` draws from the
//! ChaCha stream `c` of the generator seeded with `seed`, so every sample is a
//! pure function of `(seed, sample index)`. Chunk moments are merged in chunk
//! order after the (possibly parallel) map, which keeps estimates bit-identical
//! for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per chunk. Part of the determinism contract: changing it changes every estimate.
pub const CHUNK_SIZE: usize = 1 << 14;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive child seeds from a master seed and an index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Distance from `target` measured in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if self.std_error == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    // Chan et al. pairwise update.
    fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn finish(self, samples: usize) -> McEstimate {
        let var = if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        };
        McEstimate {
            value: self.mean,
            std_error: (var / self.count).sqrt(),
            samples,
        }
    }
}

/// Estimates `K` expectations at once from a shared stream of draws.
///
/// `integrand` consumes randomness from the supplied generator and returns one
/// sample of each of the `K` integrands.
pub fn estimate_many<const K: usize, F>(samples: usize, seed: u64, integrand: F) -> Result<[McEstimate; K]>
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync,
{
    if samples == 0 {
        return Err(Error::Argument("Monte-Carlo sample count must be at least 1".into()));
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let partials: Vec<[Moments; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            let mut acc = [Moments::default(); K];
            for _ in 0..len {
                let vals = integrand(&mut rng);
                for (a, v) in acc.iter_mut().zip(vals) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total = [Moments::default(); K];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total.map(|m| m.finish(samples)))
}

/// Single-integrand version of [`estimate_many`].
pub fn estimate<F>(samples: usize, seed: u64, integrand: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let [e] = estimate_many(samples, seed, |rng| [integrand(rng)])?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_samples_rejected() {
        assert!(matches!(estimate(0, 1, |_| 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn uniform_mean() {
        let e = estimate(200_000, 7, |rng| rng.gen::<f64>()).unwrap();
        assert!(e.z_score(0.5) < 4.0, "{e:?}");
        // Var(U) = 1/12
        let expected_se = (1.0f64 / 12.0 / 200_000.0).sqrt();
        assert!((e.std_error / expected_se - 1.0).abs() < 0.02);
    }

    #[test]
    fn bit_identical_across_thread_counts() {
        let f = |rng: &mut ChaCha8Rng| {
            let z: f64 = rng.sample(StandardNormal);
            z * z
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| estimate(100_003, 11, f).unwrap());
        let b = four.install(|| estimate(100_003, 11, f).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn std_error_halves_when_samples_quadruple() {
        let f = |rng: &mut ChaCha8Rng| rng.sample::<f64, _>(StandardNormal);
        let a = estimate(1 << 16, 3, f).unwrap();
        let b = estimate(1 << 18, 3, f).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), s.len());
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
