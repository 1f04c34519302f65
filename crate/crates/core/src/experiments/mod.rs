//! Experiment runners. Each is a pure function of its config section and a
//! master seed; sweep points draw their randomness from
//! [`derive_seed`](crate::mc::derive_seed)`(master, index)`.

mod config;
mod converge;
mod extrapolation;
mod output;
mod spectral_bias;
mod spectrum;
mod stability;

pub use config::{
    ConvergeInitConfig, ExactExtrapolationConfig, ExtrapolationConfig, RunConfig, SpectralBiasConfig, SpectrumConfig,
    StabilityConfig, Target,
};
pub use converge::{run_converge_init, ConvergeInitResult, WidthDeviation};
pub use extrapolation::{
    ray_poly_degree_fit, run_exact_extrapolation, run_extrapolation, DegreeFit, ExactExtrapolationResult,
    ExtrapolationResult, QuadraticTarget,
};
pub use output::{csv_string, write_outputs, Artifact, VERSION};
pub use spectral_bias::{run_spectral_bias, SpectralBiasResult};
pub use spectrum::{run_spectrum, SpectrumResult};
pub use stability::{run_stability, StabilityResult};
