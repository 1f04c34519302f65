use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExactExtrapolationConfig, ExtrapolationConfig};
use super::output::{csv_string, Artifact};
use crate::error::{Error, Result};
use crate::kernels::KernelModel;
use crate::mc::derive_seed;
use crate::regression::{fit, Dataset, RegressionModel};
use crate::util::{norm, sample_unit_sphere};

/// Relative residual below which a polynomial degree is accepted.
pub const DEGREE_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeFit {
    /// Smallest degree with relative residual at most 1e-3.
    pub best_degree: Option<usize>,
    /// `||f - p_k|| / ||f||` for `k = 0..=max_degree`.
    pub residuals: Vec<f64>,
    /// Coefficient of determination per degree.
    pub r_squared: Vec<f64>,
}

/// Least-squares polynomial fits of degree `0..=max_degree` to `(h, f)` samples.
pub fn ray_poly_degree_fit(values: &[(f64, f64)], max_degree: usize) -> Result<DegreeFit> {
    if values.len() <= max_degree {
        return Err(Error::Argument(format!(
            "{} samples cannot determine a degree-{max_degree} fit",
            values.len()
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (h, _)| {
            (a.min(*h), b.max(*h))
        });
    let center = 0.5 * (lo + hi);
    let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let f = DVector::from_iterator(values.len(), values.iter().map(|v| v.1));
    let fnorm = f.norm();
    let mean = f.mean();
    let sst: f64 = f.iter().map(|v| (v - mean).powi(2)).sum();
    let mut residuals = Vec::new();
    let mut r_squared = Vec::new();
    for deg in 0..=max_degree {
        let a = DMatrix::from_fn(values.len(), deg + 1, |i, j| {
            ((values[i].0 - center) / half).powi(j as i32)
        });
        let coef = a
            .clone()
            .svd(true, true)
            .solve(&f, 1e-14)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let r = &f - &a * coef;
        let ssr = r.norm_squared();
        residuals.push(if fnorm > 0.0 { r.norm() / fnorm } else { 0.0 });
        r_squared.push(if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 });
    }
    let best_degree = residuals.iter().position(|r| *r <= DEGREE_TOL);
    Ok(DegreeFit {
        best_degree,
        residuals,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationResult {
    pub h: Vec<f64>,
    pub f_pnn: Vec<f64>,
    pub f_mlp: Vec<f64>,
    pub target: Vec<f64>,
    pub pnn_jitter: f64,
    pub mlp_jitter: f64,
    pub pnn_fit: DegreeFit,
    pub mlp_fit: DegreeFit,
    /// `max |f(h+dh) - 2 f(h) + f(h-dh)|` of the MLP column.
    pub mlp_max_second_diff: f64,
    /// `max |f_mlp|` over the grid.
    pub mlp_scale: f64,
    pub artifacts: Vec<Artifact>,
}

fn lift(x: &[f64], on: bool) -> Vec<f64> {
    let mut z = x.to_vec();
    if on {
        z.push(1.0);
    }
    z
}

/// Kernel regression with the PNN (degree `N`) and MLP (depth `N + 1`) NTKs,
/// evaluated along the ray `(t + h) v` with `v = ||v|| (1, ..., 1) / sqrt(D)`.
pub fn run_extrapolation(cfg: &ExtrapolationConfig, seed: u64) -> Result<ExtrapolationResult> {
    cfg.validate()?;
    let dim = cfg.target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let x: Vec<Vec<f64>> = (0..cfg.train_points)
        .map(|_| (0..dim).map(|_| rng.gen_range(-cfg.range..=cfg.range)).collect())
        .collect();
    let y: Vec<f64> = x.iter().map(|v| cfg.target.eval(v)).collect();
    let z: Vec<Vec<f64>> = x.iter().map(|v| lift(v, cfg.lift)).collect();
    let zdim = z[0].len();
    let data = Dataset::new(z, y)?;
    let pnn = fit(&KernelModel::pnn(cfg.degree, zdim)?, &data, cfg.jitter)?;
    let mlp = fit(&KernelModel::mlp(cfg.degree + 1, zdim)?, &data, cfg.jitter)?;

    let r = cfg
        .ray_norm
        .unwrap_or_else(|| data.x.iter().map(|v| norm(v)).fold(0.0, f64::max));
    let v: Vec<f64> = vec![r / (zdim as f64).sqrt(); zdim];
    let h: Vec<f64> = (0..cfg.h_points)
        .map(|i| cfg.h_max * i as f64 / (cfg.h_points - 1) as f64)
        .collect();
    let mut f_pnn = Vec::with_capacity(h.len());
    let mut f_mlp = Vec::with_capacity(h.len());
    let mut target = Vec::with_capacity(h.len());
    for hi in &h {
        let p: Vec<f64> = v.iter().map(|c| (cfg.base_scale + hi) * c).collect();
        f_pnn.push(pnn.predict(&p)?);
        f_mlp.push(mlp.predict(&p)?);
        target.push(cfg.target.eval(&p[..dim]));
    }
    let mlp_max_second_diff = f_mlp
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .fold(0.0, f64::max);
    let mlp_scale = f_mlp.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let pairs = |f: &[f64]| -> Vec<(f64, f64)> { h.iter().copied().zip(f.iter().copied()).collect() };
    let pnn_fit = ray_poly_degree_fit(&pairs(&f_pnn), 5)?;
    let mlp_fit = ray_poly_degree_fit(&pairs(&f_mlp), 5)?;
    let csv = csv_string(
        &["h", "f_pnn", "f_mlp", "target"],
        (0..h.len()).map(|i| {
            vec![
                h[i].to_string(),
                f_pnn[i].to_string(),
                f_mlp[i].to_string(),
                target[i].to_string(),
            ]
        }),
    );
    Ok(ExtrapolationResult {
        artifacts: vec![Artifact::new("extrapolation.csv", csv)],
        pnn_jitter: pnn.jitter,
        mlp_jitter: mlp.jitter,
        h,
        f_pnn,
        f_mlp,
        target,
        pnn_fit,
        mlp_fit,
        mlp_max_second_diff,
        mlp_scale,
    })
}

/// `f(x) = x^T beta x`, stored symmetrized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTarget {
    beta: Vec<Vec<f64>>,
}

impl QuadraticTarget {
    pub fn new(beta: &[Vec<f64>]) -> Result<Self> {
        let d = beta.len();
        if d == 0 || beta.iter().any(|r| r.len() != d) {
            return Err(Error::Argument("beta must be a non-empty square matrix".into()));
        }
        let sym = (0..d)
            .map(|i| (0..d).map(|j| 0.5 * (beta[i][j] + beta[j][i])).collect())
            .collect();
        Ok(Self { beta: sym })
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.beta
            .iter()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(x).map(|(b, xj)| b * xj).sum::<f64>())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactRow {
    pub x: Vec<f64>,
    pub f_pred: f64,
    pub f_true: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactExtrapolationResult {
    pub rows: Vec<ExactRow>,
    pub median_rel_err: f64,
    pub ablation_rows: Vec<ExactRow>,
    pub ablation_median_rel_err: Option<f64>,
    pub artifacts: Vec<Artifact>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn evaluate(model: &RegressionModel, q: &QuadraticTarget, test: &[Vec<f64>]) -> Result<Vec<ExactRow>> {
    test.iter()
        .map(|x| {
            let f_pred = model.predict(x)?;
            let f_true = q.eval(x);
            let err = (f_pred - f_true).abs();
            Ok(ExactRow {
                x: x.clone(),
                f_pred,
                f_true,
                rel_err: if f_true != 0.0 { err / f_true.abs() } else { err },
            })
        })
        .collect()
}

fn rows_csv(dim: usize, rows: &[ExactRow]) -> String {
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.extend(["f_pred", "f_true", "rel_err"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(
        &header,
        rows.iter().map(|r| {
            let mut rec: Vec<String> = r.x.iter().map(f64::to_string).collect();
            rec.extend([r.f_pred.to_string(), r.f_true.to_string(), r.rel_err.to_string()]);
            rec
        }),
    )
}

/// PNN-kernel regression of a quadratic form from `{+-e_i}` plus random unit
/// points, tested on spheres of radius in `radii`. The ablation keeps only
/// the non-negative orthant (`e_i` and `|u|`).
pub fn run_exact_extrapolation(cfg: &ExactExtrapolationConfig, seed: u64) -> Result<ExactExtrapolationResult> {
    cfg.validate()?;
    let d = cfg.dim;
    let q = QuadraticTarget::new(&cfg.beta)?;
    let kernel = KernelModel::pnn(cfg.degree, d)?;
    let basis = |i: usize, s: f64| -> Vec<f64> { (0..d).map(|j| if i == j { s } else { 0.0 }).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let extra: Vec<Vec<f64>> = (0..cfg.extra_points).map(|_| sample_unit_sphere(&mut rng, d)).collect();
    let mut train: Vec<Vec<f64>> = (0..d).flat_map(|i| [basis(i, 1.0), basis(i, -1.0)]).collect();
    train.extend(extra.iter().cloned());
    let labels = |xs: &[Vec<f64>]| -> Vec<f64> { xs.iter().map(|x| q.eval(x)).collect() };
    let model = fit(&kernel, &Dataset::new(train.clone(), labels(&train))?, cfg.jitter)?;

    let mut trng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let dirs: Vec<Vec<f64>> = (0..cfg.directions).map(|_| sample_unit_sphere(&mut trng, d)).collect();
    let test: Vec<Vec<f64>> = cfg
        .radii
        .iter()
        .flat_map(|r| dirs.iter().map(move |u| u.iter().map(|c| r * c).collect()))
        .collect();
    let rows = evaluate(&model, &q, &test)?;
    let median_rel_err = median(rows.iter().map(|r| r.rel_err).collect());
    let mut artifacts = vec![Artifact::new("exact_extrapolation.csv", rows_csv(d, &rows))];

    let (ablation_rows, ablation_median_rel_err) = if cfg.ablation {
        let mut orth: Vec<Vec<f64>> = (0..d).map(|i| basis(i, 1.0)).collect();
        for u in &extra {
            let a: Vec<f64> = u.iter().map(|c| c.abs()).collect();
            if !orth.contains(&a) {
                orth.push(a);
            }
        }
        let m = fit(&kernel, &Dataset::new(orth.clone(), labels(&orth))?, cfg.jitter)?;
        let rows = evaluate(&m, &q, &test)?;
        let med = median(rows.iter().map(|r| r.rel_err).collect());
        artifacts.push(Artifact::new("exact_extrapolation_orthant.csv", rows_csv(d, &rows)));
        (rows, Some(med))
    } else {
        (Vec::new(), None)
    };
    Ok(ExactExtrapolationResult {
        rows,
        median_rel_err,
        ablation_rows,
        ablation_median_rel_err,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..41).map(|i| 0.05 * i as f64).map(|h| (h, f(h))).collect()
    }

    #[test]
    fn degree_of_exact_polynomials() {
        let line = ray_poly_degree_fit(&samples(|h| 2.0 * h - 1.0), 4).unwrap();
        assert_eq!(line.best_degree, Some(1));
        let cubic = ray_poly_degree_fit(&samples(|h| h * h * h - 2.0 * h + 0.5), 5).unwrap();
        assert_eq!(cubic.best_degree, Some(3));
        assert!(cubic.residuals[3] <= 1e-10);
        assert!(ray_poly_degree_fit(&samples(|h| h).into_iter().take(3).collect::<Vec<_>>(), 3).is_err());
    }

    #[test]
    fn quadratic_target_symmetrizes() {
        let q = QuadraticTarget::new(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(q.beta()[0][1], 1.0);
        assert_eq!(q.eval(&[1.0, 1.0]), 6.0);
    }

    #[test]
    fn zero_beta_gives_zero_predictor() {
        let cfg = ExactExtrapolationConfig {
            beta: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            directions: 4,
            ..Default::default()
        };
        let r = run_exact_extrapolation(&cfg, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.f_pred == 0.0));
    }

    #[test]
    fn training_point_is_reproduced() {
        let cfg = ExactExtrapolationConfig {
            radii: vec![1.0],
            directions: 1,
            ..Default::default()
        };
        let q = QuadraticTarget::new(&cfg.beta).unwrap();
        let kernel = KernelModel::pnn(2, 2).unwrap();
        let x = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![0.6, 0.8],
        ];
        let y = x.iter().map(|v| q.eval(v)).collect();
        let m = fit(&kernel, &Dataset::new(x, y).unwrap(), 0.0).unwrap();
        let p = m.predict(&[0.6, 0.8]).unwrap();
        assert!((p - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn ray_starts_at_base_point() {
        let cfg = ExtrapolationConfig {
            train_points: 12,
            h_points: 7,
            ..Default::default()
        };
        let r = run_extrapolation(&cfg, 3).unwrap();
        assert_eq!(r.h[0], 0.0);
        assert_eq!(r.f_pnn.len(), 7);
        let short = ExtrapolationConfig { h_points: 6, ..cfg };
        assert!(matches!(run_extrapolation(&short, 3), Err(Error::Config(_))));
    }
}
