//! Infinite-width neural tangent kernels.
//!
//! All expectations are over `w ~ N(0, I)` and carry an explicit factor 2, so
//! on the unit sphere `kappa1(x, x) = kappa2(x, x) = 1` and the degree-`N`
//! polynomial-network kernel satisfies `K(x, x) = 2N + 2`.
//!
//! | kernel | closed form |
//! |--------|-------------|
//! | PNN    | `2N <x,x'> k1 k2^(N-1) + 2 k2^N` |
//! | MFN    | `2N <x,x'> k3 k4^(N-1) + 2 k4^N` |
//! | MLP    | arc-cosine recursion, depth `N` |
//! | Poly-NL| Monte Carlo only |

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{self, McEstimate};
use crate::nets::{NetParams, PolyNlSpec};
use crate::util::{check_dims, dot, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Pnn,
    Mlp,
    Mfn,
    #[serde(rename = "polynl")]
    PolyNl,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Pnn => "pnn",
            Family::Mlp => "mlp",
            Family::Mfn => "mfn",
            Family::PolyNl => "polynl",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pnn" => Ok(Family::Pnn),
            "mlp" => Ok(Family::Mlp),
            "mfn" => Ok(Family::Mfn),
            "polynl" | "poly-nl" => Ok(Family::PolyNl),
            other => Err(Error::Argument(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// Monte-Carlo settings for kernels without a closed form (Poly-NL).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Width of the fixed random first layer `W_1`.
    pub width: usize,
    /// Seed of `W_1`.
    pub block_seed: u64,
    pub samples: usize,
    /// Seed of the gating draws `w3, w4`.
    pub seed: u64,
}

/// An analytic NTK family with its degree (PNN, MFN) or depth (MLP).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub family: Family,
    pub degree: usize,
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
}

impl KernelModel {
    pub fn new(family: Family, degree: usize, input_dim: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Argument(format!("degree/depth must be >= 2, got {degree}")));
        }
        if input_dim == 0 {
            return Err(Error::Argument("input dimension must be >= 1".into()));
        }
        if family == Family::PolyNl {
            return Err(Error::Argument(
                "the Poly-NL kernel needs Monte-Carlo settings; use KernelModel::poly_nl".into(),
            ));
        }
        Ok(Self {
            family,
            degree,
            input_dim,
            mc: None,
        })
    }

    pub fn pnn(degree: usize, input_dim: usize) -> Result<Self> {
        Self::new(Family::Pnn, degree, input_dim)
    }

    pub fn mlp(depth: usize, input_dim: usize) -> Result<Self> {
        Self::new(Family::Mlp, depth, input_dim)
    }

    pub fn mfn(degree: usize, input_dim: usize) -> Result<Self> {
        Self::new(Family::Mfn, degree, input_dim)
    }

    pub fn poly_nl(input_dim: usize, mc: McConfig) -> Result<Self> {
        if input_dim == 0 || mc.width == 0 || mc.samples == 0 {
            return Err(Error::Argument(
                "Poly-NL kernel needs positive input dim, width and sample count".into(),
            ));
        }
        Ok(Self {
            family: Family::PolyNl,
            degree: 2,
            input_dim,
            mc: Some(mc),
        })
    }

    /// `K(x, x')`. For Poly-NL this is the Monte-Carlo point estimate.
    pub fn eval(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        check_dims(x, xp)?;
        if x.len() != self.input_dim {
            return Err(Error::Argument(format!(
                "kernel expects inputs of dimension {}, got {}",
                self.input_dim,
                x.len()
            )));
        }
        match self.family {
            Family::Pnn => pnn_ntk(self.degree, x, xp),
            Family::Mlp => mlp_ntk(self.degree, x, xp),
            Family::Mfn => Ok(mfn_ntk(self.degree, x, xp)),
            Family::PolyNl => {
                let mc = self.mc.expect("constructor guarantees Monte-Carlo settings");
                let block = PolyNlSpec {
                    width: mc.width,
                    input_dim: self.input_dim,
                    seed: mc.block_seed,
                };
                Ok(polynl_ntk_mc(&block, x, xp, mc.samples, mc.seed)?.value)
            }
        }
    }

    /// Restriction of the kernel to the unit sphere in `ambient_dim` variables, as a function of `<x, x'>`.
    pub fn profile(&self, ambient_dim: usize) -> Result<KernelProfile> {
        let n = self.degree;
        let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match self.family {
            Family::Pnn => Arc::new(move |t| pnn_profile(n, t)),
            Family::Mlp => Arc::new(move |t| mlp_profile(n, t)),
            Family::Mfn => Arc::new(move |t| mfn_profile(n, t)),
            Family::PolyNl => return Err(Error::Argument("the Poly-NL kernel is not a dot-product kernel".into())),
        };
        KernelProfile::new(ambient_dim, f)
    }
}

/// A dot-product kernel on the unit sphere: `K(x, x') = kappa(<x, x'>)`.
#[derive(Clone)]
pub struct KernelProfile {
    ambient_dim: usize,
    dot_to_value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelProfile")
            .field("ambient_dim", &self.ambient_dim)
            .finish_non_exhaustive()
    }
}

impl KernelProfile {
    pub fn new(ambient_dim: usize, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::Argument(format!(
                "ambient dimension must be >= 2, got {ambient_dim}"
            )));
        }
        Ok(Self {
            ambient_dim,
            dot_to_value: f,
        })
    }

    pub fn from_fn<F>(ambient_dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(ambient_dim, Arc::new(f))
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.dot_to_value)(t)
    }

    pub fn scaled(&self, factor: f64) -> KernelProfile {
        let inner = Arc::clone(&self.dot_to_value);
        KernelProfile {
            ambient_dim: self.ambient_dim,
            dot_to_value: Arc::new(move |t| factor * inner(t)),
        }
    }
}

// ---------------------------------------------------------------------------
// Arc-cosine building blocks

/// `(pi - theta) / pi` as a function of `cos theta`.
pub fn arccos0(cos: f64) -> f64 {
    let theta = cos.clamp(-1.0, 1.0).acos();
    (PI - theta) / PI
}

/// `(sin theta + (pi - theta) cos theta) / pi` as a function of `cos theta`.
pub fn arccos1(cos: f64) -> f64 {
    let c = cos.clamp(-1.0, 1.0);
    let theta = c.acos();
    ((1.0 - c * c).max(0.0).sqrt() + (PI - theta) * c) / PI
}

/// Norms and the angle between `x` and `x'`, via `2 atan2(|u - u'|, |u + u'|)` on the
/// unit vectors, which stays accurate near 0 and pi.
fn norms_and_angle(x: &[f64], xp: &[f64]) -> Result<(f64, f64, f64)> {
    check_dims(x, xp)?;
    let nx = norm(x);
    let nxp = norm(xp);
    if nx == 0.0 || nxp == 0.0 {
        return Err(Error::Domain(
            "arc-cosine kernels are undefined for a zero-norm input".into(),
        ));
    }
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in x.iter().zip(xp) {
        let (u, v) = (a / nx, b / nxp);
        minus += (u - v) * (u - v);
        plus += (u + v) * (u + v);
    }
    Ok((nx, nxp, 2.0 * minus.sqrt().atan2(plus.sqrt())))
}

/// `2 E[relu'(w.x) relu'(w.x')]`.
pub fn kappa1(x: &[f64], xp: &[f64]) -> Result<f64> {
    let (_, _, theta) = norms_and_angle(x, xp)?;
    Ok((PI - theta) / PI)
}

/// `2 E[relu(w.x) relu(w.x')]`.
pub fn kappa2(x: &[f64], xp: &[f64]) -> Result<f64> {
    let (nx, nxp, theta) = norms_and_angle(x, xp)?;
    Ok(nx * nxp * (theta.sin() + (PI - theta) * theta.cos()) / PI)
}

/// `2 E[cos(w.x) cos(w.x')]`.
pub fn kappa3(x: &[f64], xp: &[f64]) -> f64 {
    let (minus, plus) = sq_dist_pair(x, xp);
    (-minus / 2.0).exp() + (-plus / 2.0).exp()
}

/// `2 E[sin(w.x) sin(w.x')]`.
pub fn kappa4(x: &[f64], xp: &[f64]) -> f64 {
    let (minus, plus) = sq_dist_pair(x, xp);
    (-minus / 2.0).exp() - (-plus / 2.0).exp()
}

fn sq_dist_pair(x: &[f64], xp: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), xp.len(), "input dimensions differ");
    let mut minus = 0.0;
    let mut plus = 0.0;
    for (a, b) in x.iter().zip(xp) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    (minus, plus)
}

// ---------------------------------------------------------------------------
// Family kernels

fn check_degree(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Argument(format!("degree/depth must be >= 2, got {n}")));
    }
    Ok(())
}

/// NTK of the degree-`n` polynomial network.
pub fn pnn_ntk(n: usize, x: &[f64], xp: &[f64]) -> Result<f64> {
    check_degree(n)?;
    let k1 = kappa1(x, xp)?;
    let k2 = kappa2(x, xp)?;
    let nf = n as f64;
    Ok(2.0 * nf * dot(x, xp) * k1 * k2.powi(n as i32 - 1) + 2.0 * k2.powi(n as i32))
}

fn pnn_profile(n: usize, t: f64) -> f64 {
    let k1 = arccos0(t);
    let k2 = arccos1(t);
    2.0 * n as f64 * t * k1 * k2.powi(n as i32 - 1) + 2.0 * k2.powi(n as i32)
}

/// NTK of the degree-`n` multiplicative filter network.
pub fn mfn_ntk(n: usize, x: &[f64], xp: &[f64]) -> f64 {
    let k3 = kappa3(x, xp);
    let k4 = kappa4(x, xp);
    2.0 * n as f64 * dot(x, xp) * k3 * k4.powi(n as i32 - 1) + 2.0 * k4.powi(n as i32)
}

fn mfn_profile(n: usize, t: f64) -> f64 {
    let k3 = (t - 1.0).exp() + (-t - 1.0).exp();
    let k4 = (t - 1.0).exp() - (-t - 1.0).exp();
    2.0 * n as f64 * t * k3 * k4.powi(n as i32 - 1) + 2.0 * k4.powi(n as i32)
}

/// NTK of a depth-`depth` ReLU MLP, by the layerwise recursion
/// `K_i = Sigma_i + 2 K_{i-1} SigmaDot_i`, `i = 1..depth-1`, starting at `K_0 = <x, x'>`.
///
/// `SigmaDot` carries no factor 2 here, so `2 SigmaDot = kappa1` of the previous layer.
pub fn mlp_ntk(depth: usize, x: &[f64], xp: &[f64]) -> Result<f64> {
    check_degree(depth)?;
    let (nx, nxp, mut theta) = norms_and_angle(x, xp)?;
    // Diagonal covariances are preserved by the factor-2 ReLU layer.
    let scale = nx * nxp;
    let mut ntk = dot(x, xp);
    for _ in 1..depth {
        let sigma_dot = (PI - theta) / (2.0 * PI);
        let sigma = scale * (theta.sin() + (PI - theta) * theta.cos()) / PI;
        ntk = sigma + 2.0 * ntk * sigma_dot;
        theta = (sigma / scale).clamp(-1.0, 1.0).acos();
    }
    Ok(ntk)
}

fn mlp_profile(depth: usize, t: f64) -> f64 {
    let mut sigma = t;
    let mut ntk = t;
    for _ in 1..depth {
        let d = arccos0(sigma);
        sigma = arccos1(sigma);
        ntk = sigma + ntk * d;
    }
    ntk
}

/// Depth-`depth` MLP NTK from the unrolled form
/// `K = G_N + sum_{n<N} G_n * Gdot_{n+1} * ... * Gdot_N`.
///
/// Independent of [`mlp_ntk`]: all layer covariances are built first, then the
/// products are summed, and the angles are taken with `atan2`.
pub fn mlp_ntk_compact(depth: usize, x: &[f64], xp: &[f64]) -> Result<f64> {
    check_degree(depth)?;
    let (nx, nxp, _) = norms_and_angle(x, xp)?;
    let scale = nx * nxp;
    // g[n] = G^(n+1), gdot[n] = Gdot^(n+1); gdot[0] is unused.
    let mut g = vec![dot(x, xp)];
    let mut gdot = vec![f64::NAN];
    for _ in 1..depth {
        let prev = *g.last().unwrap() / scale;
        let sin = (1.0 - prev * prev).max(0.0).sqrt();
        let theta = sin.atan2(prev);
        g.push(scale * (sin + (PI - theta) * prev) / PI);
        gdot.push(1.0 - theta / PI);
    }
    let mut total = g[depth - 1];
    for n in 0..depth - 1 {
        let tail: f64 = gdot[n + 1..].iter().product();
        total += g[n] * tail;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Which Gaussian expectation [`mc_kernel_oracle`] estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kappa {
    /// `2 E[relu'(w.x) relu'(w.x')]`
    One,
    /// `2 E[relu(w.x) relu(w.x')]`
    Two,
    /// `2 E[cos(w.x) cos(w.x')]`
    Three,
    /// `2 E[sin(w.x) sin(w.x')]`
    Four,
}

impl Kappa {
    pub const ALL: [Kappa; 4] = [Kappa::One, Kappa::Two, Kappa::Three, Kappa::Four];

    pub fn closed_form(self, x: &[f64], xp: &[f64]) -> Result<f64> {
        match self {
            Kappa::One => kappa1(x, xp),
            Kappa::Two => kappa2(x, xp),
            Kappa::Three => {
                check_dims(x, xp)?;
                Ok(kappa3(x, xp))
            }
            Kappa::Four => {
                check_dims(x, xp)?;
                Ok(kappa4(x, xp))
            }
        }
    }
}

fn kappa_integrands(u: f64, v: f64) -> [f64; 4] {
    let step = |z: f64| if z > 0.0 { 1.0 } else { 0.0 };
    [
        2.0 * step(u) * step(v),
        2.0 * u.max(0.0) * v.max(0.0),
        2.0 * u.cos() * v.cos(),
        2.0 * u.sin() * v.sin(),
    ]
}

/// Brute-force estimates of all four kappas from one shared set of draws `w ~ N(0, I)`.
pub fn mc_kappas(x: &[f64], xp: &[f64], samples: usize, seed: u64) -> Result<[McEstimate; 4]> {
    check_dims(x, xp)?;
    mc::estimate_many(samples, seed, |rng| {
        let mut u = 0.0;
        let mut v = 0.0;
        for (a, b) in x.iter().zip(xp) {
            let w: f64 = rng.sample(StandardNormal);
            u += w * a;
            v += w * b;
        }
        kappa_integrands(u, v)
    })
}

/// Brute-force estimate of one kappa; the provenance oracle for the closed forms.
pub fn mc_kernel_oracle(which: Kappa, x: &[f64], xp: &[f64], samples: usize, seed: u64) -> Result<McEstimate> {
    let all = mc_kappas(x, xp, samples, seed)?;
    Ok(all[which as usize])
}

/// Monte-Carlo NTK of a single Poly-NL block with `W_1` fixed by `block.seed`:
/// `4 E_{w3,w4}[phi(x) phi(x')]` with
/// `phi(x) = y2^T (Diag(tau) - tau tau^T)(y2 * y2)`, `tau = softmax(w3 w4 (y2 * y2))`.
pub fn polynl_ntk_mc(block: &PolyNlSpec, x: &[f64], xp: &[f64], samples: usize, seed: u64) -> Result<McEstimate> {
    check_dims(x, xp)?;
    if x.len() != block.input_dim {
        return Err(Error::Argument(format!(
            "Poly-NL block expects inputs of dimension {}, got {}",
            block.input_dim,
            x.len()
        )));
    }
    if samples == 0 {
        return Err(Error::Argument("Monte-Carlo sample count must be at least 1".into()));
    }
    let params = NetParams::init_poly_nl(block)?;
    let y = params.first_layer_relu(x);
    let yp = params.first_layer_relu(xp);
    let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let sqp: Vec<f64> = yp.iter().map(|v| v * v).collect();
    mc::estimate(samples, seed, |rng| {
        let w3: f64 = rng.sample(StandardNormal);
        let w4: f64 = rng.sample(StandardNormal);
        let gate = w3 * w4;
        4.0 * softmax_jacobian_form(gate, &y, &sq) * softmax_jacobian_form(gate, &yp, &sqp)
    })
}

/// `y^T (Diag(tau) - tau tau^T) s` with `tau = softmax(gate * s)`.
pub(crate) fn softmax_jacobian_form(gate: f64, y: &[f64], s: &[f64]) -> f64 {
    let shift = s.iter().map(|v| gate * v).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut ty = 0.0;
    let mut ts = 0.0;
    let mut tys = 0.0;
    for (yi, si) in y.iter().zip(s) {
        let t = (gate * si - shift).exp();
        z += t;
        ty += t * yi;
        ts += t * si;
        tys += t * yi * si;
    }
    tys / z - (ty / z) * (ts / z)
}

// ---------------------------------------------------------------------------
// Width requirements for convergence at initialization

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitBound {
    pub rho: f64,
    pub bound: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Argument(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// High-probability bound on `|<grad f(x), grad f(x')> - K(x, x')|` for unit inputs
/// at width `m`, holding with probability at least `1 - delta`. Natural logarithms.
pub fn theory_init_bound(n: usize, m: usize, delta: f64) -> Result<InitBound> {
    check_degree(n)?;
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::Argument("width must be >= 1".into()));
    }
    let p = (2 * n - 1) as f64;
    let rho = 2f64.sqrt().powf(p)
        * 8f64.sqrt()
        * E.powi(3)
        * (2.0 * PI).powf(0.25)
        * E.powf(1.0 / 24.0)
        * (E.powf(2.0 / E) * p / 2.0).powf(p / 2.0);
    let nf = n as f64;
    let bound = 4.0 * nf * rho * E * ((2.0 * nf / delta).ln() / m as f64).sqrt();
    Ok(InitBound { rho, bound })
}

/// Smallest integer width `m >= 2^(4N-2) ln^(2N-1)(2N/delta)`.
pub fn min_width(n: usize, delta: f64) -> Result<u64> {
    check_degree(n)?;
    check_delta(delta)?;
    let nf = n as f64;
    let raw = 2f64.powi(4 * n as i32 - 2) * (2.0 * nf / delta).ln().powi(2 * n as i32 - 1);
    let m = raw.ceil();
    if !m.is_finite() || m > u64::MAX as f64 {
        return Err(Error::Numerical(format!("width requirement {raw:e} overflows u64")));
    }
    Ok(m as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORTH: ([f64; 2], [f64; 2]) = ([1.0, 0.0], [0.0, 1.0]);

    #[test]
    fn kappa1_examples() {
        assert_eq!(kappa1(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert!(kappa1(&[1.0, 2.0], &[-1.0, -2.0]).unwrap().abs() < 1e-15);
        assert!((kappa1(&ORTH.0, &ORTH.1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(kappa1(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn kappa2_examples() {
        let x = [0.6, -0.8, 2.0];
        assert!((kappa2(&x, &x).unwrap() - dot(&x, &x)).abs() < 1e-12);
        assert!(kappa2(&[1.0, 0.0], &[-1.0, 0.0]).unwrap().abs() < 1e-15);
        assert!((kappa2(&ORTH.0, &ORTH.1).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(matches!(kappa2(&[1.0], &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn kappa3_kappa4_examples() {
        let x = [0.4, -1.1];
        let xn = [-0.4, 1.1];
        let sq = dot(&x, &x);
        assert!((kappa4(&x, &x) - (1.0 - (-2.0 * sq).exp())).abs() < 1e-15);
        assert!((kappa4(&x, &xn) + kappa4(&x, &x)).abs() < 1e-15);
        assert_eq!(kappa3(&[0.0, 0.0], &[0.0, 0.0]), 2.0);
    }

    #[test]
    fn pnn_examples() {
        let e = [1.0, 0.0];
        assert!((pnn_ntk(2, &e, &e).unwrap() - 6.0).abs() < 1e-12);
        assert!((pnn_ntk(3, &e, &e).unwrap() - 8.0).abs() < 1e-12);
        // orthogonal units: only the 2 kappa2^N term survives
        assert!((pnn_ntk(2, &ORTH.0, &ORTH.1).unwrap() - 2.0 / (PI * PI)).abs() < 1e-15);
        assert!(pnn_ntk(1, &e, &e).is_err());
    }

    #[test]
    fn mlp_examples() {
        let e = [1.0, 0.0, 0.0];
        assert!((mlp_ntk(2, &e, &e).unwrap() - 2.0).abs() < 1e-14);
        let ne = [-1.0, 0.0, 0.0];
        let a = mlp_ntk(2, &e, &ne).unwrap();
        let b = mlp_ntk_compact(2, &e, &ne).unwrap();
        assert!((a - b).abs() < 1e-12);
        for depth in 2..6 {
            let r = mlp_ntk(depth, &e, &e).unwrap();
            let c = mlp_ntk_compact(depth, &e, &e).unwrap();
            // K(x, x) = depth on the unit sphere
            assert!((r - depth as f64).abs() < 1e-12);
            assert!((c - r).abs() < 1e-12);
        }
    }

    #[test]
    fn mfn_examples() {
        assert_eq!(mfn_ntk(3, &[0.0, 0.0], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn profiles_match_evaluators_on_sphere() {
        for model in [
            KernelModel::pnn(3, 3).unwrap(),
            KernelModel::mlp(4, 3).unwrap(),
            KernelModel::mfn(2, 3).unwrap(),
        ] {
            let profile = model.profile(3).unwrap();
            for i in 0..=20 {
                let angle = PI * i as f64 / 20.0;
                let x = [1.0, 0.0, 0.0];
                let xp = [angle.cos(), angle.sin(), 0.0];
                let t = dot(&x, &xp);
                let direct = model.eval(&x, &xp).unwrap();
                assert!(
                    (profile.value(t) - direct).abs() < 1e-12,
                    "{:?} t={t}: {} vs {direct}",
                    model.family,
                    profile.value(t)
                );
            }
        }
    }

    #[test]
    fn min_width_examples() {
        assert_eq!(min_width(2, 0.1).unwrap(), 3213);
        // frozen from a 40-digit evaluation of the same expression
        assert_eq!(min_width(3, 0.1).unwrap(), 1_178_208);
        assert_eq!(min_width(4, 0.1).unwrap(), 508_329_168);
        assert!(min_width(2, 0.01).unwrap() > min_width(2, 0.1).unwrap());
        let sweep: Vec<u64> = (2..=6).map(|n| min_width(n, 0.5).unwrap()).collect();
        assert!(sweep.windows(2).all(|w| w[1] > w[0]), "{sweep:?}");
    }

    #[test]
    fn init_bound_golden() {
        // 40-digit reference evaluation of rho and the bound.
        let b = theory_init_bound(2, 4096, 0.1).unwrap();
        assert!((b.rho / 1_469.112_066_133_702_6 - 1.0).abs() < 1e-13, "{}", b.rho);
        assert!((b.bound / 958.752_815_609_102 - 1.0).abs() < 1e-13, "{}", b.bound);
        let b3 = theory_init_bound(3, 1024, 0.05).unwrap();
        assert!((b3.bound / 73_572.217_432_727_55 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn init_bound_scaling() {
        let a = theory_init_bound(2, 1000, 0.1).unwrap().bound;
        let b = theory_init_bound(2, 4000, 0.1).unwrap().bound;
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(theory_init_bound(2, 1001, 0.1).unwrap().bound < a);
        for bad in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(theory_init_bound(2, 10, bad), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn poly_nl_model_requires_mc() {
        assert!(KernelModel::new(Family::PolyNl, 2, 3).is_err());
        assert!(KernelModel::pnn(2, 0).is_err());
        let mc = McConfig {
            width: 8,
            block_seed: 1,
            samples: 100,
            seed: 2,
        };
        let m = KernelModel::poly_nl(3, mc).unwrap();
        assert!(m.profile(3).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("PNN".parse::<Family>().unwrap(), Family::Pnn);
        assert_eq!("poly-nl".parse::<Family>().unwrap(), Family::PolyNl);
        assert!("cnn".parse::<Family>().is_err());
    }
}
