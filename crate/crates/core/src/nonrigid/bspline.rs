//! Cubic B-spline interpolation of sampled grids, used to carry displacement
//! fields between resolutions.

use crate::imaging::source_coord;

use super::field::DisplacementField;

/// Samples of linear extrapolation added on each side before prefiltering, so
/// that linear data is reproduced right up to the grid edges.
const PAD: usize = 24;
const POLE: f64 = -0.267_949_192_431_122_7; // sqrt(3) - 2

/// In-place conversion of samples to cubic B-spline coefficients with
/// mirror-symmetric boundaries.
fn prefilter_line(c: &mut [f64]) {
    let n = c.len();
    if n < 2 {
        return;
    }
    let z = POLE;
    let gain = (1.0 - z) * (1.0 - 1.0 / z);
    c.iter_mut().for_each(|v| *v *= gain);

    let horizon = n.min(32);
    let mut zk = z;
    let mut sum = c[0];
    for v in c.iter().take(horizon).skip(1) {
        sum += zk * v;
        zk *= z;
    }
    c[0] = sum;
    for k in 1..n {
        c[k] += z * c[k - 1];
    }
    c[n - 1] = (z / (z * z - 1.0)) * (c[n - 1] + z * c[n - 2]);
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

fn extrapolate_line(samples: &[f64], out: &mut [f64]) {
    let n = samples.len();
    out[PAD..PAD + n].copy_from_slice(samples);
    let (left_slope, right_slope) = if n >= 2 {
        (samples[1] - samples[0], samples[n - 1] - samples[n - 2])
    } else {
        (0.0, 0.0)
    };
    for k in 1..=PAD {
        out[PAD - k] = samples[0] - k as f64 * left_slope;
        out[PAD + n - 1 + k] = samples[n - 1] + k as f64 * right_slope;
    }
}

#[inline]
fn basis(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let u = 1.0 - t;
    [
        u * u * u / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Prefiltered coefficient grid of one scalar channel.
#[derive(Clone, Debug)]
pub struct BSplineGrid {
    width: usize,
    height: usize,
    cw: usize,
    ch: usize,
    coeffs: Vec<f64>,
}

impl BSplineGrid {
    pub fn from_samples(width: usize, height: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), width * height);
        let cw = width + 2 * PAD;
        let ch = height + 2 * PAD;
        let mut coeffs = vec![0.0; cw * ch];
        for y in 0..height {
            let dst = &mut coeffs[(y + PAD) * cw..(y + PAD + 1) * cw];
            extrapolate_line(&data[y * width..(y + 1) * width], dst);
            prefilter_line(dst);
        }
        let mut col = vec![0.0; height];
        let mut padded = vec![0.0; ch];
        for x in 0..cw {
            for y in 0..height {
                col[y] = coeffs[(y + PAD) * cw + x];
            }
            extrapolate_line(&col, &mut padded);
            prefilter_line(&mut padded);
            for (y, v) in padded.iter().enumerate() {
                coeffs[y * cw + x] = *v;
            }
        }
        Self {
            width,
            height,
            cw,
            ch,
            coeffs,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Interpolated value at continuous grid coordinates `(x, y)`.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let xs = x + PAD as f64;
        let ys = y + PAD as f64;
        let xf = xs.floor();
        let yf = ys.floor();
        let wx = basis(xs - xf);
        let wy = basis(ys - yf);
        let (bx, by) = (xf as isize - 1, yf as isize - 1);
        let mut acc = 0.0;
        for (j, wyj) in wy.iter().enumerate() {
            let yi = (by + j as isize).clamp(0, self.ch as isize - 1) as usize;
            let row = &self.coeffs[yi * self.cw..(yi + 1) * self.cw];
            let mut r = 0.0;
            for (i, wxi) in wx.iter().enumerate() {
                let xi = (bx + i as isize).clamp(0, self.cw as isize - 1) as usize;
                r += wxi * row[xi];
            }
            acc += wyj * r;
        }
        acc
    }
}

/// Evaluates a displacement field on a resized grid: B-spline interpolation
/// of each channel, magnitudes rescaled to pixel units of the new grid.
#[derive(Clone, Debug)]
pub struct FieldUpsampler {
    gx: BSplineGrid,
    gy: BSplineGrid,
    new_w: usize,
    new_h: usize,
    sx: f64,
    sy: f64,
}

impl FieldUpsampler {
    pub fn new(u: &DisplacementField, new_w: usize, new_h: usize) -> Self {
        let (w, h) = u.dims();
        Self {
            gx: BSplineGrid::from_samples(w, h, u.ux()),
            gy: BSplineGrid::from_samples(w, h, u.uy()),
            new_w,
            new_h,
            sx: new_w as f64 / w as f64,
            sy: new_h as f64 / h as f64,
        }
    }

    pub fn output_dims(&self) -> (usize, usize) {
        (self.new_w, self.new_h)
    }

    /// Displacement at integer pixel `(i, j)` of the new grid.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let (w, h) = self.gx.dims();
        let x = source_coord(i, w, self.new_w);
        let y = source_coord(j, h, self.new_h);
        (self.gx.eval(x, y) * self.sx, self.gy.eval(x, y) * self.sy)
    }

    /// Displacement at a continuous position of the new grid.
    #[inline]
    pub fn at_point(&self, x: f64, y: f64) -> (f64, f64) {
        let (w, h) = self.gx.dims();
        let xo = (x + 0.5) * (w as f64 / self.new_w as f64) - 0.5;
        let yo = (y + 0.5) * (h as f64 / self.new_h as f64) - 0.5;
        (self.gx.eval(xo, yo) * self.sx, self.gy.eval(xo, yo) * self.sy)
    }
}

/// Field resized to `new_w x new_h` with cubic B-spline interpolation and
/// displacement magnitudes converted to the new pixel units.
pub fn upsample_field(u: &DisplacementField, new_w: usize, new_h: usize) -> DisplacementField {
    assert!(new_w >= 1 && new_h >= 1);
    if u.dims() == (new_w, new_h) {
        return u.clone();
    }
    let up = FieldUpsampler::new(u, new_w, new_h);
    let mut out = DisplacementField::zeros(new_w, new_h);
    for j in 0..new_h {
        for i in 0..new_w {
            let (a, b) = up.at(i, j);
            out.set(i, j, a, b);
        }
    }
    out
}
