use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::SpectralBiasConfig;
use super::output::{csv_string, Artifact};
use crate::error::{Error, Result};
use crate::kernels::Family;
use crate::mc::derive_seed;
use crate::nets::{ArchSpec, NetParams};
use crate::spectral::{residual_projections, HarmonicMixture};
use crate::util::sample_unit_sphere;

/// Projection lengths of one training run, one row per recorded iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasCurve {
    pub seed_index: usize,
    pub order: usize,
    pub iterations: Vec<usize>,
    /// `projections[r][j]` for recorded iteration `r` and harmonic `j`.
    pub projections: Vec<Vec<f64>>,
}

impl BiasCurve {
    pub fn final_projections(&self) -> &[f64] {
        self.projections.last().expect("at least the initial row is recorded")
    }

    /// Mean over recorded iterations of `p_k(t) / p_k(0)`; smaller means the
    /// harmonic is removed from the residual sooner.
    pub fn normalized_areas(&self) -> Vec<f64> {
        let p0 = &self.projections[0];
        (0..p0.len())
            .map(|j| {
                if p0[j] == 0.0 {
                    return 0.0;
                }
                self.projections.iter().map(|p| p[j] / p0[j]).sum::<f64>() / self.projections.len() as f64
            })
            .collect()
    }

    /// `final / initial` projection per harmonic.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.projections[0]
            .iter()
            .zip(self.final_projections())
            .map(|(a, b)| if *a > 0.0 { b / a } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBiasResult {
    pub harmonics: Vec<usize>,
    pub curves: Vec<BiasCurve>,
    pub artifacts: Vec<Artifact>,
}

impl SpectralBiasResult {
    pub fn curve(&self, seed_index: usize, order: usize) -> Option<&BiasCurve> {
        self.curves
            .iter()
            .find(|c| c.seed_index == seed_index && c.order == order)
    }

    pub fn harmonic_index(&self, k: usize) -> Option<usize> {
        self.harmonics.iter().position(|h| *h == k)
    }

    fn seed_mean(&self, order: usize, f: impl Fn(&BiasCurve) -> Vec<f64>) -> Vec<f64> {
        let curves: Vec<&BiasCurve> = self.curves.iter().filter(|c| c.order == order).collect();
        let mut acc = vec![0.0; self.harmonics.len()];
        for c in &curves {
            for (a, r) in acc.iter_mut().zip(f(c)) {
                *a += r;
            }
        }
        acc.iter().map(|a| a / curves.len().max(1) as f64).collect()
    }

    /// Seed-averaged `final / initial` projection per harmonic at `order`.
    pub fn mean_decay_ratios(&self, order: usize) -> Vec<f64> {
        self.seed_mean(order, BiasCurve::decay_ratios)
    }

    /// Seed-averaged [`BiasCurve::normalized_areas`] at `order`.
    pub fn mean_normalized_areas(&self, order: usize) -> Vec<f64> {
        self.seed_mean(order, BiasCurve::normalized_areas)
    }
}

fn train_one(
    cfg: &SpectralBiasConfig,
    x: &[Vec<f64>],
    y: &[f64],
    comps: &[Vec<f64>],
    order: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut params = NetParams::init(&ArchSpec {
        family: Family::Pnn,
        degree: order,
        width: cfg.width,
        input_dim: cfg.ambient_dim,
        seed: derive_seed(seed, 0),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let f0: Vec<f64> = if cfg.center_output {
        x.iter().map(|xi| params.forward(xi)).collect::<Result<_>>()?
    } else {
        vec![0.0; x.len()]
    };
    let out = params.output_offset()..params.output_offset() + params.output.len();
    let batch = cfg.batch_size.min(x.len());
    let mut iterations = Vec::new();
    let mut projections = Vec::new();
    let mut grad = vec![0.0; params.len()];
    for it in 0..=cfg.iterations {
        if it % cfg.record_every == 0 || it == cfg.iterations {
            let resid: Vec<f64> = x
                .iter()
                .zip(y)
                .zip(&f0)
                .map(|((xi, yi), c)| Ok(yi - (params.forward(xi)? - c)))
                .collect::<Result<_>>()?;
            if resid.iter().any(|r| !r.is_finite()) {
                return Err(Error::NonFinite { step: it });
            }
            iterations.push(it);
            projections.push(residual_projections(&resid, comps)?);
        }
        if it == cfg.iterations {
            break;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in sample(&mut rng, x.len(), batch).into_iter() {
            let target = f0[i] + y[i];
            let f = params.accumulate_gradient_with(&x[i], |f| f - target, &mut grad)?;
            if !f.is_finite() {
                return Err(Error::NonFinite { step: it });
            }
        }
        if !cfg.train_output {
            grad[out.clone()].iter_mut().for_each(|g| *g = 0.0);
        }
        params.axpy(-cfg.learning_rate, &grad)?;
    }
    Ok((iterations, projections))
}

/// Minibatch SGD of PNNs on a mixture of zonal harmonics, tracking how much of
/// each harmonic remains in the residual.
pub fn run_spectral_bias(cfg: &SpectralBiasConfig, seed: u64) -> Result<SpectralBiasResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mixture = HarmonicMixture::random(cfg.ambient_dim, cfg.harmonics.clone(), cfg.amplitudes.clone(), &mut rng)?;
    let x: Vec<Vec<f64>> = (0..cfg.samples)
        .map(|_| sample_unit_sphere(&mut rng, cfg.ambient_dim))
        .collect();
    let comps: Vec<Vec<f64>> = x.iter().map(|xi| mixture.components(xi)).collect();
    let y: Vec<f64> = comps.iter().map(|c| c.iter().sum()).collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.seeds)
        .flat_map(|s| cfg.orders.iter().map(move |&n| (s, n)))
        .collect();
    let runs: Vec<Result<BiasCurve>> = jobs
        .par_iter()
        .map(|&(s, order)| {
            let run_seed = derive_seed(derive_seed(seed, 1 + s as u64), order as u64);
            let (iterations, projections) = train_one(cfg, &x, &y, &comps, order, run_seed).map_err(|e| match e {
                Error::NonFinite { step } => {
                    Error::Numerical(format!("seed {s}, order {order}: non-finite loss at iteration {step}"))
                }
                e => e,
            })?;
            Ok(BiasCurve {
                seed_index: s,
                order,
                iterations,
                projections,
            })
        })
        .collect();
    // first failure in job order, whatever the thread schedule
    let curves: Vec<BiasCurve> = runs.into_iter().collect::<Result<_>>()?;
    let csv = csv_string(
        &["seed", "iteration", "order", "harmonic", "projection_length"],
        curves.iter().flat_map(|c| {
            c.iterations.iter().zip(&c.projections).flat_map(move |(it, p)| {
                cfg.harmonics.iter().zip(p).map(move |(k, v)| {
                    vec![
                        c.seed_index.to_string(),
                        it.to_string(),
                        c.order.to_string(),
                        k.to_string(),
                        v.to_string(),
                    ]
                })
            })
        }),
    );
    Ok(SpectralBiasResult {
        harmonics: cfg.harmonics.clone(),
        curves,
        artifacts: vec![Artifact::new("spectral_bias.csv", csv)],
    })
}
