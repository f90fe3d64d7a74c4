use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::filter::gaussian_blur;
use super::interp::{bilinear_clamped, cubic_clamped};
use super::plane::ImagePlane;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    Bilinear,
    Bicubic,
}

/// Source coordinate of output index `i` when resizing `from -> to` samples
/// (align-corners-false).
#[inline]
pub fn source_coord(i: usize, from: usize, to: usize) -> f64 {
    (i as f64 + 0.5) * (from as f64 / to as f64) - 0.5
}

pub fn resample(p: &ImagePlane, new_w: usize, new_h: usize, mode: ResampleMode) -> ImagePlane {
    assert!(new_w >= 1 && new_h >= 1, "target dimensions must be positive");
    let (w, h) = p.dims();
    if (w, h) == (new_w, new_h) {
        return p.clone();
    }
    let xs: Vec<f64> = (0..new_w).map(|i| source_coord(i, w, new_w)).collect();
    let mut out = vec![0.0; new_w * new_h];
    out.par_chunks_mut(new_w).enumerate().for_each(|(j, row)| {
        let y = source_coord(j, h, new_h);
        for (o, &x) in row.iter_mut().zip(&xs) {
            *o = match mode {
                ResampleMode::Bilinear => bilinear_clamped(p, x, y),
                ResampleMode::Bicubic => cubic_clamped(p, x, y),
            };
        }
    });
    ImagePlane::new(new_w, new_h, out).expect("dimensions are positive")
}

/// Resample preceded by a Gaussian of sigma `f / 2` when shrinking by factor `f > 1`.
pub fn resample_antialiased(
    p: &ImagePlane,
    new_w: usize,
    new_h: usize,
    mode: ResampleMode,
) -> ImagePlane {
    let f = (p.width() as f64 / new_w as f64).max(p.height() as f64 / new_h as f64);
    if f > 1.0 {
        resample(&gaussian_blur(p, f / 2.0), new_w, new_h, mode)
    } else {
        resample(p, new_w, new_h, mode)
    }
}
