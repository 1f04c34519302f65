//! Full-batch gradient descent on `0.5 * sum (f(x_i) - y_i)^2` with the
//! quantities needed to compare against the NTK stability bounds: loss
//! `||e||_2`, parameter step norms and empirical-NTK drift.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Family;
use crate::nets::{gram_from_rows, NetParams};
use crate::regression::{spectrum_bounds, Dataset, GramMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    /// Cadence of recorded rows (and empirical-NTK evaluations).
    pub record_every: usize,
    /// Also update `W_out`. Off by default: the output layer stays at its initialization.
    #[serde(default)]
    pub train_output: bool,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, steps: usize, record_every: usize) -> Result<Self> {
        let c = Self {
            learning_rate,
            steps,
            record_every,
            train_output: false,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Argument(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Argument("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// `||e(theta_t)||_2`.
    pub loss: f64,
    /// `||theta_t - theta_{t-1}||_2` (0 at t = 0).
    pub step_norm: f64,
    pub cum_step_norm: f64,
    /// `||K_t - K_0||_F`.
    pub ntk_drift_fro: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainTrace {
    pub config: TrainConfig,
    pub n_samples: usize,
    pub rows: Vec<TraceRow>,
    /// Frobenius norm of the initial empirical NTK.
    pub ntk0_fro: f64,
    pub final_params: NetParams,
}

impl TrainTrace {
    pub fn initial_loss(&self) -> f64 {
        self.rows[0].loss
    }

    pub fn sup_ntk_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.ntk_drift_fro).fold(0.0, f64::max)
    }

    pub fn total_step_norm(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_step_norm)
    }

    /// CSV with header `step,loss,step_norm,cum_step_norm,ntk_drift_fro`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "loss", "step_norm", "cum_step_norm", "ntk_drift_fro"])?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                r.loss.to_string(),
                r.step_norm.to_string(),
                r.cum_step_norm.to_string(),
                r.ntk_drift_fro.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Jacobian rows and outputs at every training input.
fn rows_and_outputs(params: &NetParams, x: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let pairs: Vec<(Vec<f64>, f64)> = x
        .par_iter()
        .map(|xi| {
            let mut g = vec![0.0; params.jacobian_len()];
            let f = params.accumulate_gradient(xi, 1.0, &mut g)?;
            Ok((g, f))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

fn fro_diff(a: &GramMatrix, b: &GramMatrix) -> f64 {
    (&a.entries - &b.entries).norm()
}

/// Gradient descent `theta <- theta - eta J^T e`.
pub fn gd_train(params0: &NetParams, dataset: &Dataset, config: &TrainConfig) -> Result<TrainTrace> {
    config.validate()?;
    if params0.family == Family::PolyNl {
        return Err(Error::Argument(
            "gradient descent is implemented for PNN, MFN and MLP".into(),
        ));
    }
    if dataset.dim() != params0.input_dim {
        return Err(Error::Argument("dataset dimension does not match the network".into()));
    }
    let out_range = params0.output_offset()..params0.output_offset() + params0.output.len();
    let mut params = params0.clone();
    let mut rows = Vec::new();
    let mut cum = 0.0;
    let mut last_step = 0.0;
    let mut k0: Option<GramMatrix> = None;
    let mut ntk0_fro = 0.0;
    for t in 0..=config.steps {
        let (jac, f) = rows_and_outputs(&params, &dataset.x)?;
        let e: Vec<f64> = f.iter().zip(&dataset.y).map(|(a, b)| a - b).collect();
        let loss = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !loss.is_finite() {
            return Err(Error::NonFinite { step: t });
        }
        if t == 0 || t % config.record_every == 0 || t == config.steps {
            let k = gram_from_rows(&jac);
            let drift = match &k0 {
                Some(k0) => fro_diff(&k, k0),
                None => {
                    ntk0_fro = k.entries.norm();
                    k0 = Some(k);
                    0.0
                }
            };
            rows.push(TraceRow {
                step: t,
                loss,
                step_norm: last_step,
                cum_step_norm: cum,
                ntk_drift_fro: drift,
            });
        }
        if t == config.steps {
            break;
        }
        let mut grad = vec![0.0; params.len()];
        for (row, ei) in jac.iter().zip(&e) {
            for (g, j) in grad.iter_mut().zip(row) {
                *g += ei * j;
            }
        }
        if !config.train_output {
            grad[out_range.clone()].iter_mut().for_each(|g| *g = 0.0);
        }
        last_step = config.learning_rate * grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        cum += last_step;
        params.axpy(-config.learning_rate, &grad)?;
    }
    Ok(TrainTrace {
        config: *config,
        n_samples: dataset.len(),
        rows,
        ntk0_fro,
        final_params: params,
    })
}

/// `2 / (lambda_min + lambda_max)`.
pub fn max_safe_lr(gram: &GramMatrix) -> Result<f64> {
    let (lo, hi) = spectrum_bounds(gram);
    if !(lo + hi > 0.0) {
        return Err(Error::Numerical(format!(
            "gram spectrum [{lo}, {hi}] gives no positive learning rate"
        )));
    }
    Ok(2.0 / (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub step: usize,
    pub loss: f64,
    /// `(1 - eta lambda_min / 3)^t R0`.
    pub envelope: f64,
    pub cum_step_norm: f64,
    pub ntk_drift_fro: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eta0: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub r0: f64,
    pub rows: Vec<ReportRow>,
    pub envelope_holds: bool,
    /// Smallest `envelope - loss` over recorded steps after the first.
    pub min_envelope_margin: f64,
    pub total_step_norm: f64,
    pub sup_ntk_drift: f64,
    /// `sup drift / ||K_0||_F`.
    pub rel_ntk_drift: f64,
    /// Smallest `Q` consistent with the cumulative-drift bound `3 Q R0 / lambda_min`.
    pub q_from_step_norm: f64,
    /// First recorded step after which the remaining cumulative drift is below 1e-3 of the total.
    pub drift_settled_step: Option<usize>,
}

pub fn stability_report(trace: &TrainTrace, analytic_gram: &GramMatrix, eta0: f64) -> Result<StabilityReport> {
    if analytic_gram.dim() != trace.n_samples {
        return Err(Error::Argument(format!(
            "gram is {}x{} but the trace has {} samples",
            analytic_gram.dim(),
            analytic_gram.dim(),
            trace.n_samples
        )));
    }
    let (lo, hi) = spectrum_bounds(analytic_gram);
    let r0 = trace.initial_loss();
    let rate = 1.0 - eta0 * lo / 3.0;
    let rows: Vec<ReportRow> = trace
        .rows
        .iter()
        .map(|r| ReportRow {
            step: r.step,
            loss: r.loss,
            envelope: rate.powi(r.step as i32) * r0,
            cum_step_norm: r.cum_step_norm,
            ntk_drift_fro: r.ntk_drift_fro,
        })
        .collect();
    // t = 0 has zero margin by construction
    let min_margin = rows
        .iter()
        .filter(|r| r.step > 0)
        .map(|r| r.envelope - r.loss)
        .fold(f64::INFINITY, f64::min);
    let min_margin = if min_margin.is_finite() { min_margin } else { 0.0 };
    let total = trace.total_step_norm();
    let sup = trace.sup_ntk_drift();
    let settled = trace
        .rows
        .iter()
        .find(|r| total - r.cum_step_norm <= 1e-3 * total)
        .map(|r| r.step);
    Ok(StabilityReport {
        eta0,
        lambda_min: lo,
        lambda_max: hi,
        r0,
        envelope_holds: min_margin >= 0.0,
        min_envelope_margin: min_margin,
        total_step_norm: total,
        sup_ntk_drift: sup,
        rel_ntk_drift: if trace.ntk0_fro > 0.0 {
            sup / trace.ntk0_fro
        } else {
            0.0
        },
        q_from_step_norm: if r0 > 0.0 { total * lo / (3.0 * r0) } else { 0.0 },
        drift_settled_step: settled,
        rows,
    })
}
