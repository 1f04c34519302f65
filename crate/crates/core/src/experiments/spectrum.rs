use rayon::prelude::*;
use serde::Serialize;

use super::config::SpectrumConfig;
use super::output::{csv_string, Artifact};
use crate::error::Result;
use crate::kernels::{Family, KernelModel};
use crate::spectral::{
    decay_slope, eigenvalues_from_coeffs, kernel_profile_coeffs, GegenbauerSeries, SpectralEstimate,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub family: Family,
    pub n: usize,
    pub ambient_dim: usize,
    pub series: GegenbauerSeries,
    pub estimate: SpectralEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub entries: Vec<SpectrumEntry>,
    pub artifacts: Vec<Artifact>,
}

impl SpectrumResult {
    pub fn slope(&self, family: Family, n: usize, ambient_dim: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.family == family && e.n == n && e.ambient_dim == ambient_dim)
            .and_then(|e| e.estimate.fitted_slope)
    }

    /// `slope(PNN, pnn_n) - slope(MLP, mlp_depth)` at `ambient_dim`.
    pub fn margin(&self, pnn_n: usize, mlp_depth: usize, ambient_dim: usize) -> Option<f64> {
        Some(self.slope(Family::Pnn, pnn_n, ambient_dim)? - self.slope(Family::Mlp, mlp_depth, ambient_dim)?)
    }

    /// Whether the PNN slope is non-decreasing in `N` at `ambient_dim`.
    pub fn pnn_trend_holds(&self, ambient_dim: usize) -> bool {
        let mut pts: Vec<(usize, f64)> = self
            .entries
            .iter()
            .filter(|e| e.family == Family::Pnn && e.ambient_dim == ambient_dim)
            .filter_map(|e| e.estimate.fitted_slope.map(|s| (e.n, s)))
            .collect();
        pts.sort_by_key(|p| p.0);
        pts.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

/// Mercer eigenvalues and fitted decay slopes for the PNN and MLP kernels.
pub fn run_spectrum(cfg: &SpectrumConfig) -> Result<SpectrumResult> {
    cfg.validate()?;
    let jobs: Vec<(Family, usize, usize)> = cfg
        .ambient_dims
        .iter()
        .flat_map(|&d| {
            cfg.pnn_degrees
                .iter()
                .map(move |&n| (Family::Pnn, n, d))
                .chain(cfg.mlp_depths.iter().map(move |&n| (Family::Mlp, n, d)))
        })
        .collect();
    let entries: Vec<SpectrumEntry> = jobs
        .par_iter()
        .map(|&(family, n, d)| {
            let profile = KernelModel::new(family, n, d)?.profile(d)?;
            let series = kernel_profile_coeffs(&profile, cfg.kmax, cfg.nodes())?;
            let mut estimate = eigenvalues_from_coeffs(&series, d)?;
            if let Ok(s) = decay_slope(&estimate, cfg.fit_lo, cfg.fit_hi, cfg.even_only) {
                estimate.fitted_slope = Some(s);
                estimate.fit_range = Some((cfg.fit_lo, cfg.fit_hi));
            }
            Ok(SpectrumEntry {
                family,
                n,
                ambient_dim: d,
                series,
                estimate,
            })
        })
        .collect::<Result<_>>()?;
    let mut artifacts: Vec<Artifact> = entries
        .iter()
        .map(|e| {
            Artifact::new(
                format!("spectrum_{}{}_D{}.csv", e.family, e.n, e.ambient_dim),
                csv_string(
                    &["k", "c_k", "mu_k"],
                    e.series
                        .coeffs
                        .iter()
                        .zip(&e.estimate.mu)
                        .enumerate()
                        .map(|(k, (c, m))| vec![k.to_string(), c.to_string(), m.to_string()]),
                ),
            )
        })
        .collect();
    artifacts.push(Artifact::new(
        "spectrum_slopes.csv",
        csv_string(
            &["family", "n", "ambient_dim", "slope"],
            entries.iter().map(|e| {
                vec![
                    e.family.to_string(),
                    e.n.to_string(),
                    e.ambient_dim.to_string(),
                    e.estimate.fitted_slope.map_or(String::new(), |s| s.to_string()),
                ]
            }),
        ),
    ));
    Ok(SpectrumResult { entries, artifacts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_spectrum() {
        let cfg = SpectrumConfig {
            ambient_dims: vec![4],
            pnn_degrees: vec![2],
            mlp_depths: vec![3],
            kmax: 20,
            fit_lo: 4,
            fit_hi: 20,
            ..Default::default()
        };
        let r = run_spectrum(&cfg).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(r.slope(Family::Pnn, 2, 4).unwrap() < 0.0);
        assert!(r.margin(2, 3, 4).is_some());
        assert_eq!(r.artifacts.len(), 3);
        assert_eq!(run_spectrum(&cfg).unwrap().artifacts, r.artifacts);
    }
}
