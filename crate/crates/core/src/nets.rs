//! Finite-width networks: initialization, forward passes, exact Jacobians and
//! the empirical NTK Gram matrix.
//!
//! Parameterization (width `m`, hidden factor `sqrt 2`, output factor `sqrt(2/m)`):
//!
//! ```text
//! PNN  y_1 = sqrt2 relu(W_1 x),  y_n = sqrt2 relu(W_n x) * y_{n-1},  f = sqrt(2/m) W_out y_N
//! MFN  same recursion with sin in place of relu
//! MLP  g_1 = W_1 x,  g_l = sqrt(2/m) W_l relu(g_{l-1}),  f = sqrt(2/m) W_out relu(g_{N-1})
//! ```
//!
//! With this scaling the empirical kernel `<grad f(x), grad f(x')>` at
//! initialization concentrates around the closed forms in [`crate::kernels`].
//!
//! The flattened parameter vector is `W_1` row-major, then `W_2`, ..., then
//! `W_out`; Poly-NL blocks append `w_Q`, `w_K` and the scalar `w_V`.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{softmax_jacobian_form, Family};
use crate::regression::GramMatrix;
use crate::util::dot;

/// Architecture of a finite-width network. `degree` is the polynomial degree
/// for PNN/MFN and the depth for MLP; Poly-NL ignores it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub family: Family,
    pub degree: usize,
    pub width: usize,
    pub input_dim: usize,
    pub seed: u64,
}

/// A single Poly-NL block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyNlSpec {
    pub width: usize,
    pub input_dim: usize,
    pub seed: u64,
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gating {
    pub query: Vec<f64>,
    pub key: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub family: Family,
    pub degree: usize,
    pub width: usize,
    pub input_dim: usize,
    /// PNN/MFN: `W_1..W_N` (each `m x d`). MLP: `W_1` (`m x d`) then `m x m` hidden layers.
    /// Poly-NL: `W_1` only.
    pub layers: Vec<Matrix>,
    /// `W_out` (Poly-NL: `w_2`).
    pub output: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gating: Option<Gating>,
}

impl ArchSpec {
    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.input_dim == 0 {
            return Err(Error::Argument("width and input dimension must be positive".into()));
        }
        if self.family != Family::PolyNl && self.degree < 2 {
            return Err(Error::Argument(format!(
                "degree/depth must be >= 2, got {}",
                self.degree
            )));
        }
        Ok(())
    }
}

impl NetParams {
    /// Independent standard-normal draws in flattening order, reproducible from `spec.seed`.
    pub fn init(spec: &ArchSpec) -> Result<Self> {
        spec.validate()?;
        if spec.family == Family::PolyNl {
            return Self::init_poly_nl(&PolyNlSpec {
                width: spec.width,
                input_dim: spec.input_dim,
                seed: spec.seed,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (m, d) = (spec.width, spec.input_dim);
        let layers = match spec.family {
            Family::Pnn | Family::Mfn => (0..spec.degree).map(|_| Matrix::gaussian(m, d, &mut rng)).collect(),
            Family::Mlp => {
                let mut v = vec![Matrix::gaussian(m, d, &mut rng)];
                for _ in 2..spec.degree {
                    v.push(Matrix::gaussian(m, m, &mut rng));
                }
                v
            }
            Family::PolyNl => unreachable!(),
        };
        let output = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        Ok(Self {
            family: spec.family,
            degree: spec.degree,
            width: m,
            input_dim: d,
            layers,
            output,
            gating: None,
        })
    }

    pub fn init_poly_nl(spec: &PolyNlSpec) -> Result<Self> {
        if spec.width == 0 || spec.input_dim == 0 {
            return Err(Error::Argument("width and input dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (m, d) = (spec.width, spec.input_dim);
        let w1 = Matrix::gaussian(m, d, &mut rng);
        let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.sample(StandardNormal)).collect() };
        let output = draw(m);
        let query = draw(m);
        let key = draw(m);
        let value = draw(1)[0];
        Ok(Self {
            family: Family::PolyNl,
            degree: 2,
            width: m,
            input_dim: d,
            layers: vec![w1],
            output,
            gating: Some(Gating { query, key, value }),
        })
    }

    fn layers_len(&self) -> usize {
        self.layers.iter().map(|l| l.data.len()).sum()
    }

    /// Offset of `W_out` inside the flattened vector.
    pub fn output_offset(&self) -> usize {
        self.layers_len()
    }

    /// Number of scalars in the flattened parameter vector.
    pub fn len(&self) -> usize {
        self.layers_len() + self.output.len() + self.gating.as_ref().map_or(0, |g| 2 * g.query.len() + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of [`jacobian`] rows: every parameter, except for Poly-NL where only `w_Q`, `w_K` train.
    pub fn jacobian_len(&self) -> usize {
        match self.family {
            Family::PolyNl => 2 * self.width,
            _ => self.len(),
        }
    }

    /// Map from Jacobian index to flattened-parameter index.
    fn jacobian_to_flat(&self, k: usize) -> usize {
        match self.family {
            Family::PolyNl => self.layers_len() + self.output.len() + k,
            _ => k,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.len());
        for l in &self.layers {
            theta.extend_from_slice(&l.data);
        }
        theta.extend_from_slice(&self.output);
        if let Some(g) = &self.gating {
            theta.extend_from_slice(&g.query);
            theta.extend_from_slice(&g.key);
            theta.push(g.value);
        }
        theta
    }

    /// Same architecture with the parameters taken from `theta`.
    pub fn unflatten(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.len() {
            return Err(Error::Argument(format!(
                "parameter vector has length {}, architecture needs {}",
                theta.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        let mut pos = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&theta[pos..pos + dst.len()]);
            pos += dst.len();
        };
        for l in &mut out.layers {
            take(&mut l.data);
        }
        take(&mut out.output);
        if let Some(g) = &mut out.gating {
            take(&mut g.query);
            take(&mut g.key);
            let mut v = [0.0];
            take(&mut v);
            g.value = v[0];
        }
        Ok(out)
    }

    fn get_mut(&mut self, mut i: usize) -> &mut f64 {
        for l in &mut self.layers {
            if i < l.data.len() {
                return &mut l.data[i];
            }
            i -= l.data.len();
        }
        if i < self.output.len() {
            return &mut self.output[i];
        }
        i -= self.output.len();
        let g = self.gating.as_mut().expect("parameter index out of range");
        let m = g.query.len();
        if i < m {
            &mut g.query[i]
        } else if i < 2 * m {
            &mut g.key[i - m]
        } else {
            assert_eq!(i, 2 * m, "parameter index out of range");
            &mut g.value
        }
    }

    /// `theta += scale * delta` over the flattened vector.
    pub fn axpy(&mut self, scale: f64, delta: &[f64]) -> Result<()> {
        if delta.len() != self.len() {
            return Err(Error::Argument("update length does not match parameter count".into()));
        }
        let mut pos = 0;
        let mut apply = |dst: &mut [f64]| {
            for (p, d) in dst.iter_mut().zip(&delta[pos..]) {
                *p += scale * d;
            }
            pos += dst.len();
        };
        for l in &mut self.layers {
            apply(&mut l.data);
        }
        apply(&mut self.output);
        if let Some(g) = &mut self.gating {
            apply(&mut g.query);
            apply(&mut g.key);
            let mut v = [g.value];
            apply(&mut v);
            g.value = v[0];
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Argument(format!(
                "network expects inputs of dimension {}, got {}",
                self.input_dim,
                x.len()
            )));
        }
        Ok(())
    }

    /// Network output `f(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.pass(x, None::<(fn(f64) -> f64, &mut [f64])>))
    }

    /// Adds `weight * grad_theta f(x)` into `grad` (length [`jacobian_len`](Self::jacobian_len))
    /// and returns `f(x)`.
    pub fn accumulate_gradient(&self, x: &[f64], weight: f64, grad: &mut [f64]) -> Result<f64> {
        self.accumulate_gradient_with(x, |_| weight, grad)
    }

    /// As [`accumulate_gradient`](Self::accumulate_gradient), with the weight computed
    /// from `f(x)` in the same pass (e.g. a residual `f(x) - y`).
    pub fn accumulate_gradient_with<W: FnOnce(f64) -> f64>(
        &self,
        x: &[f64],
        weight: W,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_input(x)?;
        if grad.len() != self.jacobian_len() {
            return Err(Error::Argument("gradient buffer has the wrong length".into()));
        }
        Ok(self.pass(x, Some((weight, grad))))
    }

    fn pass<W: FnOnce(f64) -> f64>(&self, x: &[f64], grad: Option<(W, &mut [f64])>) -> f64 {
        match self.family {
            Family::Pnn | Family::Mfn => self.product_pass(x, grad),
            Family::Mlp => self.mlp_pass(x, grad),
            Family::PolyNl => self.poly_nl_pass(x, grad),
        }
    }

    fn product_pass<W: FnOnce(f64) -> f64>(&self, x: &[f64], grad: Option<(W, &mut [f64])>) -> f64 {
        let (m, n, d) = (self.width, self.layers.len(), self.input_dim);
        let scale = (2.0 / m as f64).sqrt();
        let sine = self.family == Family::Mfn;
        // unit-major: vals[j * n + l]
        let mut vals = vec![0.0; m * n];
        let mut ders = vec![0.0; m * n];
        for (l, w) in self.layers.iter().enumerate() {
            for j in 0..m {
                let pre = dot(w.row(j), x);
                let (a, da) = if sine {
                    (pre.sin(), pre.cos())
                } else if pre > 0.0 {
                    (pre, 1.0)
                } else {
                    (0.0, 0.0)
                };
                vals[j * n + l] = SQRT_2 * a;
                ders[j * n + l] = SQRT_2 * da;
            }
        }
        let mut f = 0.0;
        for j in 0..m {
            let prod: f64 = vals[j * n..(j + 1) * n].iter().product();
            f += self.output[j] * prod;
        }
        let Some((weight, g)) = grad else {
            return scale * f;
        };
        let weight = weight(scale * f);
        let out_off = self.output_offset();
        let layer_size = m * d;
        let mut suffix = vec![1.0; n + 1];
        for j in 0..m {
            let v = &vals[j * n..(j + 1) * n];
            for l in (0..n).rev() {
                suffix[l] = suffix[l + 1] * v[l];
            }
            g[out_off + j] += weight * scale * suffix[0];
            let c = weight * scale * self.output[j];
            if c == 0.0 {
                continue;
            }
            let mut prefix = 1.0;
            for l in 0..n {
                let coef = c * prefix * suffix[l + 1] * ders[j * n + l];
                if coef != 0.0 {
                    let row = &mut g[l * layer_size + j * d..l * layer_size + (j + 1) * d];
                    for (gk, xk) in row.iter_mut().zip(x) {
                        *gk += coef * xk;
                    }
                }
                prefix *= v[l];
            }
        }
        scale * f
    }

    fn mlp_pass<W: FnOnce(f64) -> f64>(&self, x: &[f64], grad: Option<(W, &mut [f64])>) -> f64 {
        let m = self.width;
        let scale = (2.0 / m as f64).sqrt();
        // pre-activations per layer
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (l, w) in self.layers.iter().enumerate() {
            let pre: Vec<f64> = if l == 0 {
                (0..m).map(|j| dot(w.row(j), x)).collect()
            } else {
                let h = &acts[l - 1];
                (0..m).map(|j| scale * dot(w.row(j), h)).collect()
            };
            acts.push(pre.iter().map(|v| v.max(0.0)).collect());
            pres.push(pre);
        }
        let last = acts.last().expect("MLP has at least one hidden layer");
        let f = scale * dot(&self.output, last);
        let Some((weight, g)) = grad else {
            return f;
        };
        let weight = weight(f);
        let out_off = self.output_offset();
        for j in 0..m {
            g[out_off + j] += weight * scale * last[j];
        }
        let mut delta: Vec<f64> = (0..m)
            .map(|j| {
                if pres[pres.len() - 1][j] > 0.0 {
                    weight * scale * self.output[j]
                } else {
                    0.0
                }
            })
            .collect();
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |acc, l| {
                let o = *acc;
                *acc += l.data.len();
                Some(o)
            })
            .collect();
        for l in (0..self.layers.len()).rev() {
            let w = &self.layers[l];
            let input: Vec<f64> = if l == 0 {
                x.to_vec()
            } else {
                acts[l - 1].iter().map(|v| scale * v).collect()
            };
            let cols = w.cols;
            for j in 0..m {
                if delta[j] == 0.0 {
                    continue;
                }
                let row = &mut g[offsets[l] + j * cols..offsets[l] + (j + 1) * cols];
                for (gk, ik) in row.iter_mut().zip(&input) {
                    *gk += delta[j] * ik;
                }
            }
            if l > 0 {
                let mut back = vec![0.0; m];
                for (j, dj) in delta.iter().enumerate() {
                    if *dj != 0.0 {
                        for (b, wjk) in back.iter_mut().zip(w.row(j)) {
                            *b += dj * wjk;
                        }
                    }
                }
                for (k, b) in back.iter_mut().enumerate() {
                    *b = if pres[l - 1][k] > 0.0 { scale * *b } else { 0.0 };
                }
                delta = back;
            }
        }
        f
    }

    /// `relu(W_1 x)`, the first Poly-NL stage.
    pub fn first_layer_relu(&self, x: &[f64]) -> Vec<f64> {
        let w = &self.layers[0];
        (0..w.rows).map(|j| dot(w.row(j), x).max(0.0)).collect()
    }

    fn poly_nl_pass<W: FnOnce(f64) -> f64>(&self, x: &[f64], grad: Option<(W, &mut [f64])>) -> f64 {
        let m = self.width;
        let scale = (2.0 / m as f64).sqrt();
        let gate = self.gating.as_ref().expect("Poly-NL parameters carry gating weights");
        let y = self.first_layer_relu(x);
        let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
        let mut f = 0.0;
        let mut phis = vec![0.0; m];
        for (i, phi) in phis.iter_mut().enumerate() {
            let a = gate.query[i] * gate.key[i];
            let shift = sq.iter().map(|s| a * s).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            let mut ty = 0.0;
            for (yj, sj) in y.iter().zip(&sq) {
                let t = (a * sj - shift).exp();
                z += t;
                ty += t * yj;
            }
            f += self.output[i] * gate.value * ty / z;
            if grad.is_some() {
                *phi = softmax_jacobian_form(a, &y, &sq);
            }
        }
        if let Some((weight, g)) = grad {
            let weight = weight(scale * f);
            for i in 0..m {
                let c = weight * scale * self.output[i] * gate.value * phis[i];
                g[i] += c * gate.key[i];
                g[m + i] += c * gate.query[i];
            }
        }
        scale * f
    }
}

fn require_family(params: &NetParams, family: Family) -> Result<()> {
    if params.family != family {
        return Err(Error::Argument(format!(
            "expected {family} parameters, got {}",
            params.family
        )));
    }
    Ok(())
}

pub fn init_params(spec: &ArchSpec) -> Result<NetParams> {
    NetParams::init(spec)
}

pub fn pnn_forward(params: &NetParams, x: &[f64]) -> Result<f64> {
    require_family(params, Family::Pnn)?;
    params.forward(x)
}

pub fn mfn_forward(params: &NetParams, x: &[f64]) -> Result<f64> {
    require_family(params, Family::Mfn)?;
    params.forward(x)
}

/// Forward pass of a freshly initialized Poly-NL block.
pub fn polynl_forward(spec: &PolyNlSpec, x: &[f64]) -> Result<f64> {
    NetParams::init_poly_nl(spec)?.forward(x)
}

/// `grad_theta f(x)` over the trainable parameters (all of them, or `w_Q, w_K` for Poly-NL).
///
/// ReLU kinks use the subgradient `relu'(0) = 0`.
pub fn jacobian(params: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; params.jacobian_len()];
    params.accumulate_gradient(x, 1.0, &mut g)?;
    Ok(g)
}

/// Rows of `J(theta)`, one per input.
pub fn jacobian_rows(params: &NetParams, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    inputs.par_iter().map(|x| jacobian(params, x)).collect()
}

/// Gram matrix of a set of Jacobian rows.
pub fn gram_from_rows(rows: &[Vec<f64>]) -> GramMatrix {
    let n = rows.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| dot(&rows[i], &rows[j])).collect())
        .collect();
    GramMatrix::from_upper(n, &upper)
}

/// `K_hat = J J^T` at the given parameters.
pub fn empirical_ntk(params: &NetParams, inputs: &[Vec<f64>]) -> Result<GramMatrix> {
    Ok(gram_from_rows(&jacobian_rows(params, inputs)?))
}

/// Largest relative disagreement between the analytic gradient and central
/// differences, `|analytic - fd| / (|analytic| + 1e-6)`, over all trainable parameters.
pub fn finite_diff_check(params: &NetParams, x: &[f64], eps: f64) -> Result<f64> {
    const FLOOR: f64 = 1e-6;
    if !(eps > 0.0) {
        return Err(Error::Argument("finite-difference step must be positive".into()));
    }
    let analytic = jacobian(params, x)?;
    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for (k, a) in analytic.iter().enumerate() {
        let i = params.jacobian_to_flat(k);
        let orig = *probe.get_mut(i);
        *probe.get_mut(i) = orig + eps;
        let up = probe.forward(x)?;
        *probe.get_mut(i) = orig - eps;
        let down = probe.forward(x)?;
        *probe.get_mut(i) = orig;
        let fd = (up - down) / (2.0 * eps);
        worst = worst.max((a - fd).abs() / (a.abs() + FLOOR));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, degree: usize, width: usize, d: usize, seed: u64) -> ArchSpec {
        ArchSpec {
            family,
            degree,
            width,
            input_dim: d,
            seed,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let s = spec(Family::Pnn, 3, 16, 4, 9);
        assert_eq!(NetParams::init(&s).unwrap(), NetParams::init(&s).unwrap());
        let other = NetParams::init(&ArchSpec { seed: 10, ..s }).unwrap();
        assert_ne!(NetParams::init(&s).unwrap().flatten(), other.flatten());
    }

    #[test]
    fn init_sample_mean() {
        // m * d = 10^6 standard normal entries; 3 / sqrt(10^6) = 3e-3
        let p = NetParams::init(&spec(Family::Pnn, 2, 250_000, 4, 1)).unwrap();
        let w = &p.layers[0].data;
        assert_eq!(w.len(), 1_000_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() < 3e-3, "{mean}");
    }

    #[test]
    fn flatten_roundtrip_and_sizes() {
        for s in [
            spec(Family::Pnn, 3, 8, 2, 1),
            spec(Family::Mlp, 4, 8, 2, 1),
            spec(Family::PolyNl, 2, 8, 2, 1),
        ] {
            let p = NetParams::init(&s).unwrap();
            let theta = p.flatten();
            assert_eq!(theta.len(), p.len());
            assert_eq!(p.unflatten(&theta).unwrap(), p);
            assert!(p.unflatten(&theta[1..]).is_err());
        }
        let mlp = NetParams::init(&spec(Family::Mlp, 4, 8, 2, 1)).unwrap();
        assert_eq!(mlp.len(), 8 * 2 + 2 * 64 + 8);
    }

    #[test]
    fn zero_input_gives_zero() {
        for fam in [Family::Pnn, Family::Mfn, Family::Mlp, Family::PolyNl] {
            let p = NetParams::init(&spec(fam, 3, 32, 3, 5)).unwrap();
            assert_eq!(p.forward(&[0.0; 3]).unwrap(), 0.0, "{fam}");
        }
        let p = NetParams::init(&spec(Family::Pnn, 3, 32, 3, 5)).unwrap();
        assert!(jacobian(&p, &[0.0; 3]).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = NetParams::init(&spec(Family::Pnn, 2, 4, 3, 5)).unwrap();
        assert!(matches!(p.forward(&[1.0, 2.0]), Err(Error::Argument(_))));
        assert!(matches!(mfn_forward(&p, &[1.0, 2.0, 3.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn pnn_positive_homogeneity() {
        let p = NetParams::init(&spec(Family::Pnn, 3, 64, 4, 2)).unwrap();
        let x = [0.3, -0.7, 0.2, 0.9];
        let f = pnn_forward(&p, &x).unwrap();
        for c in [0.5, 2.0, 7.3] {
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            let fc = pnn_forward(&p, &cx).unwrap();
            assert!((fc - c.powi(3) * f).abs() <= 1e-12 * fc.abs().max(1e-300), "c={c}");
        }
    }

    #[test]
    fn pnn_euler_identity() {
        for (degree, seed) in [(2, 1), (3, 2), (5, 3)] {
            let p = NetParams::init(&spec(Family::Pnn, degree, 128, 3, seed)).unwrap();
            let x = [0.5, -0.1, 0.8];
            let f = p.forward(&x).unwrap();
            let lhs = dot(&p.flatten(), &jacobian(&p, &x).unwrap());
            let rhs = (degree + 1) as f64 * f;
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "N={degree}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn pnn_output_mean_over_seeds() {
        let x = [0.6, 0.8];
        let vals: Vec<f64> = (0..1000)
            .map(|s| {
                NetParams::init(&spec(Family::Pnn, 2, 16, 2, s))
                    .unwrap()
                    .forward(&x)
                    .unwrap()
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
    }

    #[test]
    fn mfn_output_bounds() {
        let p = NetParams::init(&spec(Family::Mfn, 3, 64, 2, 4)).unwrap();
        let scale = (2.0 / 64.0f64).sqrt();
        let wout = p.output.iter().map(|v| v * v).sum::<f64>().sqrt();
        for x in [[0.1, 0.2], [3.0, -4.0], [10.0, 0.5]] {
            let f = p.forward(&x).unwrap();
            // |y_N| <= 2^(N/2) entrywise, so ||y_N||_2 <= sqrt(m) 2^(N/2)
            let bound = scale * wout * (64.0f64).sqrt() * 2f64.powf(1.5);
            assert!(f.abs() <= bound);
        }
    }

    #[test]
    fn finite_differences_agree() {
        let cases = [
            spec(Family::Pnn, 3, 64, 4, 11),
            spec(Family::Mfn, 2, 32, 3, 12),
            spec(Family::Mlp, 3, 16, 3, 13),
            spec(Family::PolyNl, 2, 12, 3, 14),
        ];
        for s in cases {
            let p = NetParams::init(&s).unwrap();
            let x: Vec<f64> = (0..s.input_dim).map(|i| 0.37 + 0.21 * i as f64).collect();
            let err = finite_diff_check(&p, &x, 1e-4).unwrap();
            assert!(err <= 1e-5, "{:?}: {err}", s.family);
        }
    }

    #[test]
    fn finite_differences_on_single_path_net() {
        let mut p = NetParams::init(&spec(Family::Pnn, 2, 8, 3, 21)).unwrap();
        for (j, o) in p.output.iter_mut().enumerate() {
            if j != 0 {
                *o = 0.0;
            }
        }
        // keep unit 0 active in both layers
        for l in &mut p.layers {
            l.data[..3].copy_from_slice(&[1.0, 0.5, 0.25]);
        }
        let err = finite_diff_check(&p, &[1.0, 1.0, 1.0], 1e-4).unwrap();
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn finite_difference_error_does_not_grow_with_smaller_step() {
        let p = NetParams::init(&spec(Family::Mfn, 2, 16, 2, 3)).unwrap();
        let x = [0.4, -0.3];
        let coarse = finite_diff_check(&p, &x, 1e-3).unwrap();
        let fine = finite_diff_check(&p, &x, 5e-4).unwrap();
        assert!(fine <= coarse.max(1e-9), "{coarse} -> {fine}");
    }

    #[test]
    fn empirical_ntk_is_symmetric_psd() {
        let p = NetParams::init(&spec(Family::Pnn, 2, 64, 3, 8)).unwrap();
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, 0.1 * i as f64, -0.3]).collect();
        let g = empirical_ntk(&p, &xs).unwrap();
        let k = &g.entries;
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
        let j0 = jacobian(&p, &xs[0]).unwrap();
        assert!((k[(0, 0)] - dot(&j0, &j0)).abs() < 1e-12);
        let (lo, _) = crate::regression::spectrum_bounds(&g);
        assert!(lo >= -1e-10 * k.trace());
    }

    #[test]
    fn poly_nl_jacobian_covers_query_and_key() {
        let p = NetParams::init(&spec(Family::PolyNl, 2, 10, 3, 2)).unwrap();
        assert_eq!(jacobian(&p, &[0.2, 0.4, -0.1]).unwrap().len(), 20);
    }
}
