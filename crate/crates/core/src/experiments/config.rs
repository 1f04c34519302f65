use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Top-level configuration file: global settings plus one table per experiment.
///
/// ```toml
/// seed = 7
/// [spectral_bias]
/// iterations = 1000
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub converge_init: ConvergeInitConfig,
    pub stability: StabilityConfig,
    pub extrapolation: ExtrapolationConfig,
    pub exact_extrapolation: ExactExtrapolationConfig,
    pub spectrum: SpectrumConfig,
    pub spectral_bias: SpectralBiasConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config(format!("{name} must be >= 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeInitConfig {
    pub degree: usize,
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub seeds: usize,
    /// Number of fixed unit-sphere input pairs.
    pub pairs: usize,
    pub delta: f64,
}

impl Default for ConvergeInitConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            input_dim: 5,
            widths: vec![256, 1024, 4096],
            seeds: 20,
            pairs: 4,
            delta: 0.1,
        }
    }
}

impl ConvergeInitConfig {
    pub fn validate(&self) -> Result<()> {
        positive("input_dim", self.input_dim)?;
        positive("seeds", self.seeds)?;
        positive("pairs", self.pairs)?;
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config(
                "widths must be a non-empty list of positive integers".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub family: crate::kernels::Family,
    pub degree: usize,
    pub input_dim: usize,
    pub samples: usize,
    /// Width at which the loss envelope is checked.
    pub width: usize,
    /// Widths compared for NTK drift.
    pub sweep_widths: Vec<usize>,
    pub seeds: usize,
    pub steps: usize,
    pub record_every: usize,
    /// Learning rate as a fraction of `2 / (lambda_min + lambda_max)`.
    pub lr_fraction: f64,
    pub train_output: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            family: crate::kernels::Family::Pnn,
            degree: 2,
            input_dim: 4,
            samples: 16,
            width: 2048,
            sweep_widths: vec![256, 4096],
            seeds: 5,
            steps: 500,
            record_every: 10,
            lr_fraction: 0.5,
            train_output: false,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        positive("samples", self.samples)?;
        positive("width", self.width)?;
        positive("seeds", self.seeds)?;
        positive("record_every", self.record_every)?;
        if !(self.lr_fraction > 0.0 && self.lr_fraction < 1.0) {
            return Err(Error::Config("lr_fraction must lie in (0, 1)".into()));
        }
        if self.sweep_widths.contains(&0) {
            return Err(Error::Config("sweep widths must be positive".into()));
        }
        Ok(())
    }
}

/// One-dimensional and planar targets for the ray experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `x^3 + x^2 - 10x + 5`
    Poly3,
    /// `cos(2x)`
    Cos2x,
    /// `x1^2 + x2^2`
    Quad2d,
}

impl Target {
    pub fn dim(self) -> usize {
        match self {
            Target::Poly3 | Target::Cos2x => 1,
            Target::Quad2d => 2,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Target::Poly3 => {
                let v = x[0];
                v * v * v + v * v - 10.0 * v + 5.0
            }
            Target::Cos2x => (2.0 * x[0]).cos(),
            Target::Quad2d => x[0] * x[0] + x[1] * x[1],
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly3" => Ok(Target::Poly3),
            "cos2x" => Ok(Target::Cos2x),
            "quad2d" => Ok(Target::Quad2d),
            other => Err(Error::Argument(format!("unknown target {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtrapolationConfig {
    pub target: Target,
    /// PNN degree `N`; the MLP baseline has depth `N + 1`.
    pub degree: usize,
    pub train_points: usize,
    /// Training inputs are uniform in `[-range, range]` per coordinate.
    pub range: f64,
    /// Append a constant 1 coordinate to every input.
    pub lift: bool,
    /// Base scale `t > 1` of the ray `(t + h) v`.
    pub base_scale: f64,
    pub h_max: f64,
    pub h_points: usize,
    /// `||v||`; defaults to the largest training norm.
    pub ray_norm: Option<f64>,
    pub jitter: f64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            target: Target::Poly3,
            degree: 3,
            train_points: 64,
            range: 1.0,
            lift: true,
            base_scale: 1.5,
            h_max: 2.0,
            h_points: 41,
            ray_norm: None,
            jitter: 0.0,
        }
    }
}

impl ExtrapolationConfig {
    pub fn validate(&self) -> Result<()> {
        positive("train_points", self.train_points)?;
        if self.h_points < 7 {
            return Err(Error::Config(
                "h_points must be >= 7 to separate ray degrees up to 5".into(),
            ));
        }
        if !(self.base_scale > 1.0) || !(self.h_max > 0.0) || !(self.range > 0.0) {
            return Err(Error::Config("need base_scale > 1, h_max > 0 and range > 0".into()));
        }
        if let Some(r) = self.ray_norm {
            if !(r > 0.0) {
                return Err(Error::Config("ray_norm must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactExtrapolationConfig {
    pub dim: usize,
    /// Row-major `d x d` matrix; only its symmetric part matters.
    pub beta: Vec<Vec<f64>>,
    /// Random unit points added to `{+-e_i}`.
    pub extra_points: usize,
    pub radii: Vec<f64>,
    pub directions: usize,
    pub degree: usize,
    pub jitter: f64,
    pub ablation: bool,
}

impl Default for ExactExtrapolationConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            beta: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            extra_points: 16,
            radii: vec![1.5, 2.0, 2.5, 3.0],
            directions: 64,
            degree: 2,
            jitter: 0.0,
            ablation: true,
        }
    }
}

impl ExactExtrapolationConfig {
    pub fn validate(&self) -> Result<()> {
        positive("dim", self.dim)?;
        positive("directions", self.directions)?;
        if self.beta.len() != self.dim || self.beta.iter().any(|r| r.len() != self.dim) {
            return Err(Error::Config(format!("beta must be {0}x{0}", self.dim)));
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("radii must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub ambient_dims: Vec<usize>,
    pub pnn_degrees: Vec<usize>,
    pub mlp_depths: Vec<usize>,
    pub kmax: usize,
    /// Quadrature nodes; defaults to `8 kmax`.
    pub nodes: Option<usize>,
    pub fit_lo: usize,
    pub fit_hi: usize,
    pub even_only: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            ambient_dims: vec![3, 4, 6],
            pnn_degrees: vec![2, 3, 4, 6],
            mlp_depths: vec![2, 3, 4],
            kmax: 40,
            nodes: None,
            fit_lo: 10,
            fit_hi: 40,
            even_only: true,
        }
    }
}

impl SpectrumConfig {
    pub fn nodes(&self) -> usize {
        self.nodes.unwrap_or(8 * self.kmax)
    }

    pub fn validate(&self) -> Result<()> {
        positive("kmax", self.kmax)?;
        if self.ambient_dims.iter().any(|d| *d < 3) {
            return Err(Error::Config("ambient dimensions must be >= 3".into()));
        }
        if self.fit_lo > self.fit_hi || self.fit_hi > self.kmax {
            return Err(Error::Config("fit range must satisfy fit_lo <= fit_hi <= kmax".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralBiasConfig {
    pub ambient_dim: usize,
    pub samples: usize,
    pub harmonics: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub orders: Vec<usize>,
    pub width: usize,
    pub iterations: usize,
    pub record_every: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seeds: usize,
    /// Train on `f - f_0` so the initial function is zero.
    pub center_output: bool,
    pub train_output: bool,
}

impl Default for SpectralBiasConfig {
    fn default() -> Self {
        Self {
            ambient_dim: 3,
            samples: 1000,
            harmonics: vec![1, 3, 4, 5, 8, 12],
            amplitudes: vec![1.0; 6],
            orders: vec![3, 6, 9],
            width: 2048,
            iterations: 5000,
            record_every: 50,
            learning_rate: 0.0016,
            batch_size: 50,
            seeds: 3,
            center_output: true,
            train_output: true,
        }
    }
}

impl SpectralBiasConfig {
    pub fn validate(&self) -> Result<()> {
        positive("samples", self.samples)?;
        positive("width", self.width)?;
        positive("record_every", self.record_every)?;
        positive("batch_size", self.batch_size)?;
        positive("seeds", self.seeds)?;
        if self.ambient_dim < 3 {
            return Err(Error::Config("ambient_dim must be >= 3".into()));
        }
        if self.harmonics.len() != self.amplitudes.len() {
            return Err(Error::Config("harmonics and amplitudes differ in length".into()));
        }
        if self.orders.iter().any(|n| *n < 2) {
            return Err(Error::Config("orders must be >= 2".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = RunConfig::from_toml_str("seed = 3\n[spectral_bias]\niterations = 10\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.spectral_bias.iterations, 10);
        assert_eq!(c.spectral_bias.width, 2048);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml_str("sed = 3"), Err(Error::Config(_))));
    }

    #[test]
    fn roundtrip() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn targets() {
        assert_eq!(Target::Poly3.eval(&[1.0]), -3.0);
        assert_eq!(Target::Quad2d.eval(&[1.0, 2.0]), 5.0);
        assert_eq!("cos2x".parse::<Target>().unwrap(), Target::Cos2x);
    }
}
