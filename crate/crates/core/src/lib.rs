//! Numerical laboratory for point-vortex approximations of the dissipative
//! modified SQG equation with transport noise, its Galerkin truncation, and the
//! Fock-space generator.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod error;
pub mod fft;
pub mod field;
pub mod galerkin;
pub mod harness;
pub mod kernel;
pub mod modes;
pub mod pairing;
pub mod rng;
pub mod stats;
pub mod testfn;
pub mod theta;
pub mod vortex;

pub use chaos::{ChaosVector, CylinderFunction, WeightSpec};
pub use error::{Error, Result};
pub use field::{sample_white_noise, SpectralField};
pub use galerkin::{DriftBackend, DriftEngine, GalerkinPath, GalerkinState, IntegratorConfig};
pub use harness::{EnsembleSpec, StatReport};
pub use kernel::{Kernel, KernelBackend, KernelSeries, KernelTable};
pub use modes::Mode;
pub use num_complex::Complex64;
pub use testfn::TestFunction;
pub use theta::ThetaSeq;
pub use vortex::{VortexConfig, VortexPath, VortexState};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
