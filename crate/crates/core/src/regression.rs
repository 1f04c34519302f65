//! Min-norm kernel regression `f(x) = k(x)^T K^{-1} y` with analytic NTKs.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelModel;

/// Training pairs. Rows of `x` must be pairwise distinct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Argument("dataset is empty".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Argument(format!("{} inputs but {} labels", x.len(), y.len())));
        }
        let d = x[0].len();
        if d == 0 || x.iter().any(|r| r.len() != d) {
            return Err(Error::Argument("inputs must share a positive dimension".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// Reads a CSV whose header is `x1,...,xd,y`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        let cols = header.len();
        if cols < 2 {
            return Err(Error::Argument("dataset needs at least one feature and a label".into()));
        }
        for (i, name) in header.iter().take(cols - 1).enumerate() {
            if name.trim() != format!("x{}", i + 1) {
                return Err(Error::Argument(format!(
                    "feature column {} must be named x{}, found {name:?}",
                    i + 1,
                    i + 1
                )));
            }
        }
        if header.get(cols - 1).map(str::trim) != Some("y") {
            return Err(Error::Argument("last column must be named y".into()));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Argument(format!("dataset row {}: {e}", line + 1)))?;
            if rec.len() != cols {
                return Err(Error::Argument(format!(
                    "dataset row {} has {} fields, expected {cols}",
                    line + 1,
                    rec.len()
                )));
            }
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Argument(format!("dataset row {}: {s:?}: {e}", line + 1)))
                })
                .collect::<Result<_>>()?;
            y.push(vals[cols - 1]);
            x.push(vals[..cols - 1].to_vec());
        }
        Self::new(x, y)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (xi, yi) in self.x.iter().zip(&self.y) {
            let mut rec: Vec<String> = xi.iter().map(f64::to_string).collect();
            rec.push(yi.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Symmetric kernel Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub jitter_applied: f64,
}

impl GramMatrix {
    /// Builds from row-wise upper triangles: `upper[i][j - i] = K_ij`.
    pub fn from_upper(n: usize, upper: &[Vec<f64>]) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in upper.iter().enumerate() {
            for (off, v) in row.iter().enumerate() {
                m[(i, i + off)] = *v;
                m[(i + off, i)] = *v;
            }
        }
        Self {
            entries: m,
            jitter_applied: 0.0,
        }
    }

    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Argument("gram matrix must be square".into()));
        }
        Ok(Self {
            entries,
            jitter_applied: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

fn check_distinct(x: &[Vec<f64>]) -> Result<()> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        x[a].iter()
            .zip(&x[b])
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in idx.windows(2) {
        if x[w[0]] == x[w[1]] {
            return Err(Error::Precondition(format!(
                "training inputs {} and {} are identical",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `K_ij = kernel(x_i, x_j)`; the upper triangle is computed and mirrored.
pub fn assemble_gram(kernel: &KernelModel, x: &[Vec<f64>]) -> Result<GramMatrix> {
    if x.is_empty() {
        return Err(Error::Argument("no inputs".into()));
    }
    check_distinct(x)?;
    let n = x.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel.eval(&x[i], &x[j])).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    Ok(GramMatrix::from_upper(n, &upper))
}

/// `(lambda_min, lambda_max)` of the un-jittered Gram.
pub fn spectrum_bounds(gram: &GramMatrix) -> (f64, f64) {
    let eig = gram.entries.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegressionModel {
    pub dataset: Dataset,
    pub kernel: KernelModel,
    pub alpha: Vec<f64>,
    /// Diagonal shift actually used in the solve.
    pub jitter: f64,
}

const RESIDUAL_TOL: f64 = 1e-8;

/// Cholesky solve with one step of iterative refinement; `None` if the
/// factorization fails or the residual stays above tolerance.
fn try_solve(k: &DMatrix<f64>, jitter: f64, y: &DVector<f64>) -> Option<DVector<f64>> {
    let n = k.nrows();
    let shifted = k + DMatrix::identity(n, n) * jitter;
    let chol = shifted.clone().cholesky()?;
    let mut alpha = chol.solve(y);
    let r = y - &shifted * &alpha;
    alpha += chol.solve(&r);
    let resid = (y - &shifted * &alpha).amax();
    let scale = y.amax();
    if !alpha.iter().all(|v| v.is_finite()) || resid > RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) {
        if scale == 0.0 && resid == 0.0 {
            return Some(alpha);
        }
        return None;
    }
    Some(alpha)
}

/// Fits `alpha` solving `(K + jitter I) alpha = y`.
///
/// On failure the jitter climbs `1e-12 s, 1e-11 s, ..., 1e-6 s` with
/// `s = trace(K)/n`; past that a [`Error::SingularGram`] is returned.
pub fn fit(kernel: &KernelModel, dataset: &Dataset, jitter: f64) -> Result<RegressionModel> {
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(Error::Argument(format!("jitter must be finite and >= 0, got {jitter}")));
    }
    let gram = assemble_gram(kernel, &dataset.x)?;
    let (alpha, used) = solve_with_ladder(&gram, &dataset.y, jitter)?;
    Ok(RegressionModel {
        dataset: dataset.clone(),
        kernel: kernel.clone(),
        alpha,
        jitter: used,
    })
}

/// Jitter-ladder solve against a precomputed Gram. Returns `(alpha, jitter used)`.
pub fn solve_with_ladder(gram: &GramMatrix, y: &[f64], jitter: f64) -> Result<(Vec<f64>, f64)> {
    let n = gram.dim();
    if y.len() != n {
        return Err(Error::Argument("label count does not match gram size".into()));
    }
    let yv = DVector::from_column_slice(y);
    let s = gram.entries.trace() / n as f64;
    let mut ladder = vec![jitter];
    ladder.extend((0..=6).map(|e| 10f64.powi(e - 12) * s).filter(|j| *j > jitter));
    for j in &ladder {
        if let Some(alpha) = try_solve(&gram.entries, *j, &yv) {
            return Ok((alpha.iter().copied().collect(), *j));
        }
    }
    let (lo, _) = spectrum_bounds(gram);
    Err(Error::SingularGram {
        jitter: *ladder.last().unwrap_or(&jitter),
        lambda_min: lo,
    })
}

impl RegressionModel {
    /// Kernel vector `k(x)_i = K(x, x_i)`.
    pub fn kernel_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dataset.x.iter().map(|xi| self.kernel.eval(x, xi)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let k = self.kernel_vector(x)?;
        Ok(k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum())
    }
}

pub fn predict(model: &RegressionModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}
