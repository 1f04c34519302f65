//! Neural tangent kernels of polynomial networks with Hadamard products.
//!
//! * [`kernels`]: closed-form and Monte-Carlo NTKs (PNN, MLP, MFN, Poly-NL) and the
//!   width bound at initialization.
//! * [`nets`]: finite-width networks, exact Jacobians, empirical NTK Gram matrices.
//! * [`regression`]: min-norm kernel regression.
//! * [`dynamics`]: gradient-descent traces for the stability checks.
//! * [`spectral`]: Gegenbauer expansions, Mercer eigenvalues and decay slopes.
//! * [`experiments`]: configurable experiment runners with CSV/JSON output.
//!
//! ```
//! use polyntk::kernels::KernelModel;
//! let k = KernelModel::pnn(2, 2).unwrap();
//! assert_eq!(k.eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 6.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod mc;
pub mod nets;
pub mod regression;
pub mod spectral;
mod util;

pub use error::{Error, Result};
pub use kernels::{Family, KernelModel, KernelProfile};
pub use mc::McEstimate;
pub use nets::{ArchSpec, NetParams, PolyNlSpec};
pub use regression::{Dataset, GramMatrix, RegressionModel};
pub use util::{parse_vector, sample_unit_sphere};
