//! Raster types and low-level image operations.

mod clahe;
mod filter;
pub mod interp;
pub mod io;
mod plane;
pub mod pyramid;
mod resample;

pub use clahe::{clahe, ClaheParams, CLAHE_BINS};
pub use filter::{gaussian_blur, gaussian_kernel, normalize_unit, to_grayscale, LUMA_WEIGHTS};
pub use interp::{bicubic_sample, bicubic_sample_grad, bicubic_sample_with, PixelSource, Region};
pub use plane::{fit_dims, quantize_u8, ImagePlane, RgbImage};
pub use pyramid::{PyramidImage, PyramidLevel};
pub use resample::{resample, resample_antialiased, source_coord, ResampleMode};
