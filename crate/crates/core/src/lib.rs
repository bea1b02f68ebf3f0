//! Pair energies, spectral norms and Wasserstein distances for point
//! configurations on flat tori and spheres.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod geometry;
pub mod kernels;
pub mod optimize;
pub mod special;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{Manifold, ManifoldKind, PointConfiguration};
pub use kernels::{EnergyReport, KernelKind, KernelSpec, Normalization};
pub use optimize::{MinimizationResult, OptimizerParams};
pub use spectral::{HMinus1Norm, SpectralMeasure};
pub use transport::{DiscreteMeasure, Method, Solver, TransportProblem, W2Estimate};
