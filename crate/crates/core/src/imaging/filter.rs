use rayon::prelude::*;

use super::plane::{ImagePlane, RgbImage};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub fn to_grayscale(img: &RgbImage) -> ImagePlane {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| {
            let l = (wr * px[0] as f64 + wg * px[1] as f64 + wb * px[2] as f64) / 255.0;
            l.clamp(0.0, 1.0)
        })
        .collect();
    ImagePlane::new(img.width(), img.height(), data).expect("dimensions carried over")
}

/// Min-max rescale to `[0, 1]`. A constant plane is clamped into range instead.
pub fn normalize_unit(p: &ImagePlane) -> ImagePlane {
    let (lo, hi) = p.min_max();
    let span = hi - lo;
    if !(span > 1e-12) {
        return p.map(|v| v.clamp(0.0, 1.0));
    }
    p.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders. `sigma == 0` is the identity.
pub fn gaussian_blur(p: &ImagePlane, sigma: f64) -> ImagePlane {
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and non-negative");
    if sigma == 0.0 {
        return p.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = p.dims();
    let src = p.data();

    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let row = &src[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let xi = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * row[xi];
            }
            *o = acc;
        }
    });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, orow)| {
        for (k, kv) in kernel.iter().enumerate() {
            let yi = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let trow = &tmp[yi * w..(yi + 1) * w];
            for (o, t) in orow.iter_mut().zip(trow) {
                *o += kv * t;
            }
        }
    });
    ImagePlane::new(w, h, out).expect("dimensions carried over")
}
