//! Character recognition from compressive measurements.
//!
//! The pipeline segments binary character images, projects each segment
//! through a random ±1 Bernoulli matrix, and classifies the resulting
//! measurement vectors with a one-vs-one ensemble of linear SVMs. Sparse
//! recovery solvers (ℓ0 brute force, basis pursuit, total-variation
//! minimization) check that the measurements retain the image content.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the common `f64` instantiations.

pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod imaging;
pub mod linalg;
pub mod reconstruction;
pub mod scalar;
pub mod sensing;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SignalVector = imaging::SignalVector<f64>;
pub type SignalVector32 = imaging::SignalVector<f32>;
pub type MeasurementMatrix = sensing::MeasurementMatrix<f64>;
pub type MeasurementMatrix32 = sensing::MeasurementMatrix<f32>;
pub type FeatureVector = sensing::FeatureVector<f64>;
pub type FeatureVector32 = sensing::FeatureVector<f32>;
pub type RicEstimate = sensing::RicEstimate<f64>;
pub type ReconstructionResult = reconstruction::ReconstructionResult<f64>;
pub type ReconstructionResult32 = reconstruction::ReconstructionResult<f32>;
pub type SvmBinaryModel = classifier::SvmBinaryModel<f64>;
pub type EcocModel = classifier::EcocModel<f64>;
pub type EcocModel32 = classifier::EcocModel<f32>;
