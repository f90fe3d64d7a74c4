use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::AffineTransform;
use crate::imaging::{bicubic_sample_grad, bicubic_sample_with, ImagePlane, PixelSource};

use super::field::DisplacementField;

fn check_dims(p: &ImagePlane, u: &DisplacementField) -> Result<()> {
    if p.dims() != u.dims() {
        return Err(Error::ShapeMismatch {
            expected: p.dims(),
            actual: u.dims(),
        });
    }
    Ok(())
}

/// `out(x, y) = p(x + ux, y + uy)` with bicubic sampling and a zero border.
pub fn warp(p: &ImagePlane, u: &DisplacementField) -> Result<ImagePlane> {
    check_dims(p, u)?;
    let w = p.width();
    let mut out = vec![0.0; p.data().len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let base = y * w;
        for (x, o) in row.iter_mut().enumerate() {
            let i = base + x;
            *o = bicubic_sample_with(p, x as f64 + u.ux()[i], y as f64 + u.uy()[i], 0.0);
        }
    });
    ImagePlane::new(w, p.height(), out)
}

/// Warped image together with the source gradient at every sampled position.
pub(crate) struct WarpWithGrad {
    pub values: Vec<f64>,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

pub(crate) fn warp_with_grad(p: &ImagePlane, u: &DisplacementField) -> Result<WarpWithGrad> {
    check_dims(p, u)?;
    let w = p.width();
    let n = p.data().len();
    let mut values = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    values
        .par_chunks_mut(w)
        .zip(gx.par_chunks_mut(w))
        .zip(gy.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((vr, gxr), gyr))| {
            let base = y * w;
            for x in 0..w {
                let i = base + x;
                let (v, dx, dy) =
                    bicubic_sample_grad(p, x as f64 + u.ux()[i], y as f64 + u.uy()[i], 0.0);
                vr[x] = v;
                gxr[x] = dx;
                gyr[x] = dy;
            }
        });
    Ok(WarpWithGrad { values, gx, gy })
}

/// Samples `p` at `affine(x, y)` for every pixel of a `w x h` output.
pub fn warp_affine<P: PixelSource + Sync>(p: &P, t: &AffineTransform, w: usize, h: usize) -> ImagePlane {
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let (sx, sy) = t.apply_xy(x as f64, y as f64);
            *o = bicubic_sample_with(p, sx, sy, 0.0);
        }
    });
    ImagePlane::new(w, h, out).expect("dimensions are positive")
}
