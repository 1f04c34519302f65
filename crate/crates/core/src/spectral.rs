//! Gegenbauer machinery on the unit sphere `S^(D-1)`.
//!
//! Everything is parameterized by the ambient dimension `D` (inputs have `D`
//! coordinates), with Gegenbauer index `gamma = (D - 2) / 2` and harmonic
//! multiplicities `F(D - 1, k)`. A dot-product kernel `kappa(<x, x'>)` expands
//! as `kappa(t) = sum_k c_k G_k(t)` with `G_k = C_k / C_k(1)`, and its Mercer
//! eigenvalues are `mu_k = c_k / F(D - 1, k)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelProfile;
use crate::util::{dot, sample_unit_sphere};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `C_k^(gamma)`.
    Standard,
    /// `G_k = C_k / C_k(1)`, so `G_k(1) = 1`.
    Normalized,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Argument(format!("gegenbauer index must be > 0, got {gamma}")));
    }
    Ok(())
}

pub fn gamma_for_dim(ambient_dim: usize) -> Result<f64> {
    if ambient_dim < 3 {
        return Err(Error::Argument(format!(
            "ambient dimension must be >= 3 for a positive gegenbauer index, got {ambient_dim}"
        )));
    }
    Ok((ambient_dim as f64 - 2.0) / 2.0)
}

/// `C_0(t), ..., C_kmax(t)` by the three-term recurrence.
pub fn gegenbauer_all(kmax: usize, gamma: f64, t: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(kmax + 1);
    c.push(1.0);
    if kmax >= 1 {
        c.push(2.0 * gamma * t);
    }
    for k in 2..=kmax {
        let kf = k as f64;
        let next = (2.0 * (kf + gamma - 1.0) * t * c[k - 1] - (kf + 2.0 * gamma - 2.0) * c[k - 2]) / kf;
        c.push(next);
    }
    c
}

/// `C_k(1) = (2 gamma)_k / k!`.
pub fn gegenbauer_at_one(k: usize, gamma: f64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (2.0 * gamma + j as f64) / (j as f64 + 1.0))
}

pub fn gegenbauer_eval(k: usize, gamma: f64, t: f64, normalization: Normalization) -> Result<f64> {
    check_gamma(gamma)?;
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::Argument(format!("t must lie in [-1, 1], got {t}")));
    }
    let c = gegenbauer_all(k, gamma, t)[k];
    Ok(match normalization {
        Normalization::Standard => c,
        Normalization::Normalized => c / gegenbauer_at_one(k, gamma),
    })
}

/// Number of degree-`k` spherical harmonics on the sphere in `D` variables, with `d = D - 1`:
/// `F(d, k) = (2k + d - 1) / k * binom(k + d - 2, d - 1)` and `F(d, 0) = 1`.
pub fn fdk(ambient_dim: usize, k: usize) -> Result<f64> {
    if ambient_dim < 2 {
        return Err(Error::Argument("ambient dimension must be >= 2".into()));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let d = ambient_dim - 1;
    // binom(k + d - 2, d - 1)
    let (top, choose) = (k + d - 2, d - 1);
    let binom = (0..choose).fold(1.0, |acc, j| acc * (top - j) as f64 / (j + 1) as f64);
    Ok((2 * k + d - 1) as f64 / k as f64 * binom)
}

fn poch(a: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, j| acc * (a + j as f64))
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Coefficients `lambda_s` with `C_p C_q = sum_s lambda_s C_(p+q-2s)`, `s = 0..=min(p, q)`,
/// for the standard Gegenbauer family of index `v`.
pub fn linearization_coeffs(p: usize, q: usize, v: f64) -> Result<Vec<f64>> {
    check_gamma(v)?;
    let m = p + q;
    Ok((0..=p.min(q))
        .map(|s| {
            let a = (m as f64 + v - 2.0 * s as f64) / (m as f64 + v - s as f64);
            let b = poch(v, s) * poch(v, p - s) * poch(v, q - s) / (factorial(s) * factorial(p - s) * factorial(q - s));
            let c = poch(2.0 * v, m - s) / poch(v, m - s);
            let d = factorial(m - 2 * s) / poch(2.0 * v, m - 2 * s);
            a * b * c * d
        })
        .collect())
}

/// `(P_n(z), P_n'(z))` by the Legendre recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in it {
        let t = s + v;
        c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
        s = t;
    }
    s + c
}

/// Quadrature rule for `int_{-1}^{1} g(t) (1 - t^2)^(gamma - 1/2) dt`, built in the angle
/// `t = cos(theta)` where the weight becomes `sin(theta)^(D-2)`.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    pub ambient_dim: usize,
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(ambient_dim: usize, nodes: usize) -> Result<Self> {
        gamma_for_dim(ambient_dim)?;
        if nodes == 0 {
            return Err(Error::Argument("quadrature needs at least one node".into()));
        }
        let (u, w) = gauss_legendre(nodes);
        let mut t = Vec::with_capacity(nodes);
        let mut weights = Vec::with_capacity(nodes);
        for (ui, wi) in u.iter().zip(&w) {
            let theta = 0.5 * PI * (ui + 1.0);
            t.push(theta.cos());
            weights.push(0.5 * PI * wi * theta.sin().powi(ambient_dim as i32 - 2));
        }
        Ok(Self {
            ambient_dim,
            t,
            weights,
        })
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        compensated_sum(self.t.iter().zip(&self.weights).map(|(t, w)| w * g(*t)))
    }
}

/// Mercer coefficients of a dot-product kernel in the normalized basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GegenbauerSeries {
    pub ambient_dim: usize,
    pub gamma: f64,
    pub normalization: Normalization,
    pub coeffs: Vec<f64>,
    pub nodes: usize,
}

impl GegenbauerSeries {
    pub fn kmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `sum_k c_k basis_k(t)`.
    pub fn reconstruct(&self, t: f64) -> f64 {
        let c = gegenbauer_all(self.kmax(), self.gamma, t);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, ck)| match self.normalization {
                Normalization::Standard => ck * c[k],
                Normalization::Normalized => ck * c[k] / gegenbauer_at_one(k, self.gamma),
            })
            .sum()
    }
}

/// Coefficients `c_k`, `k = 0..=kmax`, with `kappa(t) = sum c_k G_k(t)`. Requires `nodes >= 4 kmax`.
pub fn kernel_profile_coeffs(profile: &KernelProfile, kmax: usize, nodes: usize) -> Result<GegenbauerSeries> {
    if nodes < 4 * kmax.max(1) {
        return Err(Error::Argument(format!(
            "{nodes} quadrature nodes cannot resolve degree {kmax}; need at least {}",
            4 * kmax.max(1)
        )));
    }
    let dim = profile.ambient_dim();
    let gamma = gamma_for_dim(dim)?;
    let quad = SphereQuadrature::new(dim, nodes)?;
    let values: Vec<f64> = quad.t.iter().map(|t| profile.value(*t)).collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "kernel profile is not finite on [-1, 1]: {bad}"
        )));
    }
    let table: Vec<Vec<f64>> = quad.t.iter().map(|t| gegenbauer_all(kmax, gamma, *t)).collect();
    let coeffs = (0..=kmax)
        .map(|k| {
            let num = compensated_sum((0..nodes).map(|i| quad.weights[i] * values[i] * table[i][k]));
            let den = compensated_sum((0..nodes).map(|i| quad.weights[i] * table[i][k] * table[i][k]));
            num / den * gegenbauer_at_one(k, gamma)
        })
        .collect();
    Ok(GegenbauerSeries {
        ambient_dim: dim,
        gamma,
        normalization: Normalization::Normalized,
        coeffs,
        nodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub mu: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub fit_range: Option<(usize, usize)>,
}

/// `mu_k = c_k / F(D - 1, k)`.
pub fn eigenvalues_from_coeffs(series: &GegenbauerSeries, ambient_dim: usize) -> Result<SpectralEstimate> {
    if series.normalization != Normalization::Normalized {
        return Err(Error::Argument(
            "eigenvalues need coefficients in the normalized basis".into(),
        ));
    }
    let mu = series
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| Ok(c / fdk(ambient_dim, k)?))
        .collect::<Result<_>>()?;
    Ok(SpectralEstimate {
        mu,
        fitted_slope: None,
        fit_range: None,
    })
}

/// Floor below which eigenvalues are dropped from slope fits.
pub const MU_FLOOR: f64 = 1e-14;

/// Least-squares slope of `log mu_k` against `log k` over `k_lo..=k_hi`
/// (even `k` only when `even_only`), skipping `mu_k <= 1e-14`.
pub fn decay_slope(estimate: &SpectralEstimate, k_lo: usize, k_hi: usize, even_only: bool) -> Result<f64> {
    let pts: Vec<(f64, f64)> = (k_lo.max(1)..=k_hi.min(estimate.mu.len().saturating_sub(1)))
        .filter(|k| !even_only || k % 2 == 0)
        .filter(|k| estimate.mu[*k] > MU_FLOOR)
        .map(|k| ((k as f64).ln(), estimate.mu[k].ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Argument(format!(
            "only {} usable eigenvalues in [{k_lo}, {k_hi}]; need 5",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Target `(1/N) sum_k A_k G_k(<x, zeta_k>)` built from zonal harmonics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMixture {
    pub ambient_dim: usize,
    pub degrees: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub anchors: Vec<Vec<f64>>,
    /// `sqrt(sum_k A_k^2 / F(D-1, k))`, the L2 norm of the unnormalized sum on the sphere.
    pub normalizer: f64,
}

impl HarmonicMixture {
    pub fn new(ambient_dim: usize, degrees: Vec<usize>, amplitudes: Vec<f64>, anchors: Vec<Vec<f64>>) -> Result<Self> {
        gamma_for_dim(ambient_dim)?;
        if degrees.len() != amplitudes.len() || degrees.len() != anchors.len() {
            return Err(Error::Argument(
                "degrees, amplitudes and anchors must have equal length".into(),
            ));
        }
        for a in &anchors {
            if a.len() != ambient_dim || (dot(a, a).sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Argument(
                    "anchors must be unit vectors in the ambient dimension".into(),
                ));
            }
        }
        let normalizer = degrees
            .iter()
            .zip(&amplitudes)
            .map(|(k, a)| Ok(a * a / fdk(ambient_dim, *k)?))
            .sum::<Result<f64>>()?
            .sqrt();
        Ok(Self {
            ambient_dim,
            degrees,
            amplitudes,
            anchors,
            normalizer,
        })
    }

    /// Anchors drawn uniformly on the sphere.
    pub fn random<R: Rng + ?Sized>(
        ambient_dim: usize,
        degrees: Vec<usize>,
        amplitudes: Vec<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        let anchors = degrees.iter().map(|_| sample_unit_sphere(rng, ambient_dim)).collect();
        Self::new(ambient_dim, degrees, amplitudes, anchors)
    }

    /// Per-degree terms `A_k G_k(<x, zeta_k>) / N`; they sum to the target.
    pub fn components(&self, x: &[f64]) -> Vec<f64> {
        if self.normalizer == 0.0 {
            return vec![0.0; self.degrees.len()];
        }
        let gamma = (self.ambient_dim as f64 - 2.0) / 2.0;
        self.degrees
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.anchors)
            .map(|((k, a), z)| {
                let t = dot(x, z).clamp(-1.0, 1.0);
                a * gegenbauer_all(*k, gamma, t)[*k] / gegenbauer_at_one(*k, gamma) / self.normalizer
            })
            .collect()
    }
}

pub fn harmonic_target_eval(mixture: &HarmonicMixture, x: &[f64]) -> f64 {
    mixture.components(x).iter().sum()
}

/// `|<r, c_j>| / (sqrt(n) ||c_j||)` for each column `c_j` of `components` (`n` rows).
pub fn residual_projections(residual: &[f64], components: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = residual.len();
    if components.len() != n {
        return Err(Error::Argument("residual and component rows differ in length".into()));
    }
    let cols = components.first().map_or(0, Vec::len);
    if components.iter().any(|r| r.len() != cols) {
        return Err(Error::Argument("ragged component matrix".into()));
    }
    let sqrt_n = (n as f64).sqrt();
    Ok((0..cols)
        .map(|j| {
            let inner: f64 = residual.iter().zip(components).map(|(r, c)| r * c[j]).sum();
            let cn = components.iter().map(|c| c[j] * c[j]).sum::<f64>().sqrt();
            if cn == 0.0 {
                0.0
            } else {
                inner.abs() / (sqrt_n * cn)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::ln_gamma;

    fn grid() -> impl Iterator<Item = f64> {
        (0..=100).map(|i| -1.0 + 0.02 * i as f64)
    }

    #[test]
    fn low_degree_values() {
        for t in grid() {
            assert_eq!(gegenbauer_eval(0, 0.7, t, Normalization::Standard).unwrap(), 1.0);
        }
        assert_eq!(gegenbauer_eval(1, 1.0, 0.5, Normalization::Standard).unwrap(), 1.0);
        for g in [0.5, 1.0, 1.5, 2.0] {
            for t in grid() {
                let c2 = gegenbauer_eval(2, g, t, Normalization::Standard).unwrap();
                assert!((c2 - (2.0 * g * (g + 1.0) * t * t - g)).abs() < 1e-12);
            }
        }
        assert!(gegenbauer_eval(2, 1.0, 1.5, Normalization::Standard).is_err());
        assert!(gegenbauer_eval(2, 0.0, 0.5, Normalization::Standard).is_err());
    }

    #[test]
    fn normalized_is_one_at_one_and_bounded() {
        for k in 0..=12 {
            assert!((gegenbauer_eval(k, 0.5, 1.0, Normalization::Normalized).unwrap() - 1.0).abs() < 1e-12);
            for t in grid() {
                assert!(gegenbauer_eval(k, 0.5, t, Normalization::Normalized).unwrap().abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(fdk(3, 1).unwrap(), 3.0);
        assert_eq!(fdk(3, 2).unwrap(), 5.0);
        assert_eq!(fdk(7, 0).unwrap(), 1.0);
        // S^3: (k+1)^2
        for k in 1..10 {
            assert!((fdk(4, k).unwrap() - ((k + 1) * (k + 1)) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i18 - 2.0 / 19.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn quadrature_norms_match_closed_form() {
        for dim in [3, 4, 6] {
            let gamma = gamma_for_dim(dim).unwrap();
            let q = SphereQuadrature::new(dim, 256).unwrap();
            for k in 0..=20 {
                let num = q.integrate(|t| gegenbauer_all(k, gamma, t)[k].powi(2));
                let ln_h = PI.ln() + (1.0 - 2.0 * gamma) * 2f64.ln() + ln_gamma(k as f64 + 2.0 * gamma)
                    - ln_gamma(k as f64 + 1.0)
                    - (k as f64 + gamma).ln()
                    - 2.0 * ln_gamma(gamma);
                assert!((num / ln_h.exp() - 1.0).abs() < 1e-11, "D={dim} k={k}");
            }
        }
    }

    #[test]
    fn orthogonality() {
        for dim in [3, 4, 5] {
            let gamma = gamma_for_dim(dim).unwrap();
            let q = SphereQuadrature::new(dim, 256).unwrap();
            for p in 0..=8 {
                for r in 0..p {
                    let v = q.integrate(|t| {
                        let c = gegenbauer_all(8, gamma, t);
                        c[p] * c[r]
                    });
                    assert!(v.abs() <= 1e-10, "{p},{r}: {v}");
                }
            }
        }
    }

    #[test]
    fn linearization_small_cases() {
        assert_eq!(linearization_coeffs(1, 0, 1.0).unwrap(), vec![1.0]);
        let l = linearization_coeffs(1, 1, 1.0).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-14 && (l[1] - 1.0).abs() < 1e-14);
        assert!(linearization_coeffs(2, 2, 0.0).is_err());
    }

    #[test]
    fn coefficients_of_basis_function() {
        let p = KernelProfile::from_fn(5, |t| gegenbauer_eval(3, 1.5, t, Normalization::Normalized).unwrap()).unwrap();
        let s = kernel_profile_coeffs(&p, 10, 80).unwrap();
        for (k, c) in s.coeffs.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((c - want).abs() <= 1e-10, "k={k}: {c}");
        }
    }

    #[test]
    fn linear_profile_reconstructs() {
        let p = KernelProfile::from_fn(4, |t| t).unwrap();
        let s = kernel_profile_coeffs(&p, 6, 48).unwrap();
        for t in grid() {
            assert!((s.reconstruct(t) - t).abs() <= 1e-10);
        }
    }

    #[test]
    fn too_few_nodes_rejected() {
        let p = KernelProfile::from_fn(4, |t| t).unwrap();
        assert!(kernel_profile_coeffs(&p, 30, 100).is_err());
    }

    #[test]
    fn pnn_profile_reconstruction_and_scaling() {
        let k = KernelModel::pnn(2, 4).unwrap();
        let prof = k.profile(4).unwrap();
        let s = kernel_profile_coeffs(&prof, 60, 480).unwrap();
        // the profile is not smooth at t = 1, so truncation is checked away from it
        for t in grid().filter(|t| t.abs() <= 0.9) {
            let err = (s.reconstruct(t) - prof.value(t)).abs();
            assert!(err < 1e-3, "t={t}: {err}");
        }
        let e = eigenvalues_from_coeffs(&s, 4).unwrap();
        assert_eq!(e.mu[0], s.coeffs[0]);
        let doubled = kernel_profile_coeffs(&prof.scaled(2.0), 60, 480).unwrap();
        let e2 = eigenvalues_from_coeffs(&doubled, 4).unwrap();
        for (a, b) in e.mu.iter().zip(&e2.mu) {
            assert!((2.0 * a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn slope_of_power_laws() {
        for scale in [1.0, 5.0] {
            let mu: Vec<f64> = (0..=50)
                .map(|k| if k == 0 { 1.0 } else { scale * (k as f64).powi(-3) })
                .collect();
            let e = SpectralEstimate {
                mu,
                fitted_slope: None,
                fit_range: None,
            };
            assert!((decay_slope(&e, 10, 40, true).unwrap() + 3.0).abs() < 1e-6);
            assert!((decay_slope(&e, 10, 40, false).unwrap() + 3.0).abs() < 1e-6);
        }
        let sparse = SpectralEstimate {
            mu: vec![1.0; 8],
            fitted_slope: None,
            fit_range: None,
        };
        assert!(decay_slope(&sparse, 1, 7, true).is_err());
    }

    #[test]
    fn harmonic_mixture_basics() {
        let z = vec![0.0, 0.0, 1.0];
        let m = HarmonicMixture::new(3, vec![4], vec![1.0], vec![z.clone()]).unwrap();
        let v = harmonic_target_eval(&m, &z);
        assert!((v - 1.0 / m.normalizer).abs() < 1e-14);
        assert!((m.normalizer - (1.0f64 / 9.0).sqrt()).abs() < 1e-15);
        let empty = HarmonicMixture::new(3, vec![], vec![], vec![]).unwrap();
        assert_eq!(harmonic_target_eval(&empty, &z), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mix = HarmonicMixture::random(3, vec![1, 3, 4, 5, 8, 12], vec![1.0; 6], &mut rng).unwrap();
        let bound: f64 = mix.amplitudes.iter().map(|a| a.abs()).sum::<f64>() / mix.normalizer;
        for _ in 0..200 {
            let x = sample_unit_sphere(&mut rng, 3);
            assert!(harmonic_target_eval(&mix, &x).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn projections() {
        let comps: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()])
            .collect();
        let col0: Vec<f64> = comps.iter().map(|c| c[0]).collect();
        let p = residual_projections(&col0, &comps).unwrap();
        let norm0 = col0.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((p[0] - norm0 / 50f64.sqrt()).abs() < 1e-14);
        assert_eq!(residual_projections(&[0.0; 50], &comps).unwrap(), vec![0.0, 0.0]);
        assert!(residual_projections(&[0.0; 3], &comps).is_err());
    }
}
