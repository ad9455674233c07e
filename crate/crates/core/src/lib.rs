//! Hodge decomposition of directed flow networks: oriented clique complexes,
//! Hodge Laplacians, gradient/curl/harmonic splitting, harmonic edge
//! clustering, network flow measures and the accompanying panel regressions.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod cluster;
pub mod complex;
pub mod error;
pub mod hodge;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod regress;
pub mod scalar;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type EdgeFlow = complex::EdgeFlow<f64>;
pub type HodgeDecomposition = hodge::HodgeDecomposition<f64>;
pub type HarmonicBasis = hodge::HarmonicBasis<f64>;
pub type HodgeLaplacian = hodge::HodgeLaplacian<f64>;
pub type NormalizationDegrees = hodge::NormalizationDegrees<f64>;
pub type DecomposeOptions = hodge::DecomposeOptions<f64>;
pub type HarmonicOptions = hodge::HarmonicOptions<f64>;
pub type PlantedFlow = synth::PlantedFlow<f64>;
pub type CscMatrix = sparse::CscMatrix<f64>;
