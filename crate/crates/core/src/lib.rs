//! Registration engine for very large 2-D images.
//!
//! The pipeline has three stages: preprocessing (pyramid level selection,
//! grayscale, normalization, CLAHE), an exhaustive multi-scale/multi-angle
//! feature-based affine search, and multilevel deformable registration that
//! minimizes local NCC plus a diffusive regularizer.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod imaging;
pub mod initial;
pub mod nonrigid;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{AffineTransform, Point2};
pub use imaging::{ImagePlane, PyramidImage, RgbImage};
pub use nonrigid::{DisplacementField, NonrigidConfig, RegistrationResult};
pub use pipeline::PipelineConfig;
