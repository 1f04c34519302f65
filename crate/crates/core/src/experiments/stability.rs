use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::StabilityConfig;
use super::output::{csv_string, Artifact};
use crate::dynamics::{gd_train, max_safe_lr, stability_report, StabilityReport, TrainConfig, TrainTrace};
use crate::error::Result;
use crate::kernels::KernelModel;
use crate::mc::derive_seed;
use crate::nets::{ArchSpec, NetParams};
use crate::regression::{assemble_gram, Dataset};
use crate::util::sample_unit_sphere;

#[derive(Clone, Debug)]
pub struct StabilityRun {
    pub width: usize,
    pub seed_index: usize,
    pub trace: TrainTrace,
    pub report: StabilityReport,
}

#[derive(Clone, Debug)]
pub struct StabilityResult {
    pub eta0: f64,
    pub runs: Vec<StabilityRun>,
    pub artifacts: Vec<Artifact>,
}

impl StabilityResult {
    pub fn runs_at(&self, width: usize) -> impl Iterator<Item = &StabilityRun> {
        self.runs.iter().filter(move |r| r.width == width)
    }

    pub fn envelope_holds_at(&self, width: usize) -> bool {
        let mut any = false;
        for r in self.runs_at(width) {
            any = true;
            if !r.report.envelope_holds {
                return false;
            }
        }
        any
    }

    pub fn median_sup_drift(&self, width: usize) -> Option<f64> {
        let mut v: Vec<f64> = self.runs_at(width).map(|r| r.report.sup_ntk_drift).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        })
    }
}

/// Unit-sphere inputs with labels `x1 x2 + x3` (or `x1` below three dimensions).
pub(crate) fn stability_data(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| sample_unit_sphere(&mut rng, d)).collect();
    let y = x
        .iter()
        .map(|v| if d >= 3 { v[0] * v[1] + v[2] } else { v[0] })
        .collect();
    Dataset::new(x, y)
}

/// Gradient-descent traces over widths and seeds, compared with the loss envelope.
pub fn run_stability(cfg: &StabilityConfig, seed: u64) -> Result<StabilityResult> {
    cfg.validate()?;
    let data = stability_data(cfg.samples, cfg.input_dim, derive_seed(seed, 0))?;
    let kernel = KernelModel::new(cfg.family, cfg.degree, cfg.input_dim)?;
    let gram = assemble_gram(&kernel, &data.x)?;
    let eta0 = cfg.lr_fraction * max_safe_lr(&gram)?;
    let train = TrainConfig {
        learning_rate: eta0,
        steps: cfg.steps,
        record_every: cfg.record_every,
        train_output: cfg.train_output,
    };
    let mut widths = cfg.sweep_widths.clone();
    widths.push(cfg.width);
    widths.sort_unstable();
    widths.dedup();
    let jobs: Vec<(usize, usize)> = widths
        .iter()
        .flat_map(|&m| (0..cfg.seeds).map(move |s| (m, s)))
        .collect();
    let runs: Vec<StabilityRun> = jobs
        .par_iter()
        .map(|&(width, s)| {
            let params = NetParams::init(&ArchSpec {
                family: cfg.family,
                degree: cfg.degree,
                width,
                input_dim: cfg.input_dim,
                seed: derive_seed(derive_seed(seed, 1 + s as u64), width as u64),
            })?;
            let trace = gd_train(&params, &data, &train)?;
            let report = stability_report(&trace, &gram, eta0)?;
            Ok(StabilityRun {
                width,
                seed_index: s,
                trace,
                report,
            })
        })
        .collect::<Result<_>>()?;

    let mut artifacts = Vec::new();
    for r in &runs {
        let mut buf = Vec::new();
        r.trace.write_csv(&mut buf)?;
        artifacts.push(Artifact::new(
            format!("stability_m{}_s{}.csv", r.width, r.seed_index),
            String::from_utf8(buf).expect("csv is utf-8"),
        ));
    }
    artifacts.push(Artifact::new(
        "stability_envelope.csv",
        csv_string(
            &[
                "width",
                "seed",
                "step",
                "loss",
                "envelope",
                "cum_step_norm",
                "ntk_drift_fro",
            ],
            runs.iter().flat_map(|r| {
                r.report.rows.iter().map(move |row| {
                    vec![
                        r.width.to_string(),
                        r.seed_index.to_string(),
                        row.step.to_string(),
                        row.loss.to_string(),
                        row.envelope.to_string(),
                        row.cum_step_norm.to_string(),
                        row.ntk_drift_fro.to_string(),
                    ]
                })
            }),
        ),
    ));
    artifacts.push(Artifact::new(
        "stability_summary.csv",
        csv_string(
            &[
                "width",
                "seed",
                "eta0",
                "lambda_min",
                "lambda_max",
                "r0",
                "envelope_holds",
                "min_envelope_margin",
                "total_step_norm",
                "sup_ntk_drift",
                "rel_ntk_drift",
                "q_from_step_norm",
                "drift_settled_step",
            ],
            runs.iter().map(|r| {
                let p = &r.report;
                vec![
                    r.width.to_string(),
                    r.seed_index.to_string(),
                    p.eta0.to_string(),
                    p.lambda_min.to_string(),
                    p.lambda_max.to_string(),
                    p.r0.to_string(),
                    p.envelope_holds.to_string(),
                    p.min_envelope_margin.to_string(),
                    p.total_step_norm.to_string(),
                    p.sup_ntk_drift.to_string(),
                    p.rel_ntk_drift.to_string(),
                    p.q_from_step_norm.to_string(),
                    p.drift_settled_step.map_or(String::new(), |s| s.to_string()),
                ]
            }),
        ),
    ));
    Ok(StabilityResult { eta0, runs, artifacts })
}
