//! Point sampling kernels.
//!
//! All sampling uses the pixel-center convention: pixel `(i, j)` sits at
//! continuous coordinate `(i, j)`, and a plane of width `w` covers `[0, w-1]`.

use super::plane::ImagePlane;

/// Catmull-Rom parameter of the cubic convolution kernel.
pub const CUBIC_A: f64 = -0.5;

/// Anything that can hand out single pixels. Lets the same sampling code run
/// over whole planes and over cropped regions of much larger images.
pub trait PixelSource {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn pixel(&self, x: usize, y: usize) -> f64;
}

impl PixelSource for ImagePlane {
    #[inline]
    fn width(&self) -> usize {
        ImagePlane::width(self)
    }
    #[inline]
    fn height(&self) -> usize {
        ImagePlane::height(self)
    }
    #[inline]
    fn pixel(&self, x: usize, y: usize) -> f64 {
        self.get(x, y)
    }
}

/// A window `[x0, x0+w) x [y0, y0+h)` of a larger image of size
/// `full_width x full_height`. Pixel accessors take full-image coordinates.
#[derive(Clone, Debug)]
pub struct Region<'a> {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub full_width: usize,
    pub full_height: usize,
    pub data: &'a [f64],
}

impl PixelSource for Region<'_> {
    #[inline]
    fn width(&self) -> usize {
        self.full_width
    }
    #[inline]
    fn height(&self) -> usize {
        self.full_height
    }
    #[inline]
    fn pixel(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x >= self.x0 && x < self.x0 + self.w, "x {x} outside region");
        debug_assert!(y >= self.y0 && y < self.y0 + self.h, "y {y} outside region");
        self.data[(y - self.y0) * self.w + (x - self.x0)]
    }
}

#[inline]
fn kernel(s: f64) -> f64 {
    let a = CUBIC_A;
    let s = s.abs();
    if s <= 1.0 {
        ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0
    } else if s < 2.0 {
        ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a
    } else {
        0.0
    }
}

/// Derivative of the kernel for `s >= 0`.
#[inline]
fn kernel_deriv_pos(s: f64) -> f64 {
    let a = CUBIC_A;
    if s <= 1.0 {
        (3.0 * (a + 2.0) * s - 2.0 * (a + 3.0)) * s
    } else if s < 2.0 {
        (3.0 * a * s - 10.0 * a) * s + 8.0 * a
    } else {
        0.0
    }
}

/// Taps at `floor(x) - 1 .. floor(x) + 2` for fractional offset `t`.
#[inline]
pub(crate) fn cubic_weights(t: f64) -> [f64; 4] {
    [kernel(t + 1.0), kernel(t), kernel(1.0 - t), kernel(2.0 - t)]
}

#[inline]
pub(crate) fn cubic_weight_derivs(t: f64) -> [f64; 4] {
    [
        kernel_deriv_pos(t + 1.0),
        kernel_deriv_pos(t),
        -kernel_deriv_pos(1.0 - t),
        -kernel_deriv_pos(2.0 - t),
    ]
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

#[inline]
fn taps(x: f64, n: usize) -> ([usize; 4], f64) {
    let xf = x.floor();
    let base = xf as isize;
    let idx = [
        clamp_index(base - 1, n),
        clamp_index(base, n),
        clamp_index(base + 1, n),
        clamp_index(base + 2, n),
    ];
    (idx, x - xf)
}

/// Cubic convolution with indices clamped to the image. Used by resampling,
/// where sample positions may fall slightly outside the pixel-center domain.
#[inline]
pub fn cubic_clamped<P: PixelSource + ?Sized>(p: &P, x: f64, y: f64) -> f64 {
    let (xi, tx) = taps(x, p.width());
    let (yi, ty) = taps(y, p.height());
    let wx = cubic_weights(tx);
    let wy = cubic_weights(ty);
    let mut acc = 0.0;
    for j in 0..4 {
        let mut row = 0.0;
        for i in 0..4 {
            row += wx[i] * p.pixel(xi[i], yi[j]);
        }
        acc += wy[j] * row;
    }
    acc
}

/// Slack on the domain edges so coordinates that went through a frame change
/// and back (e.g. `-1e-16` for column 0) still sample the image.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[inline]
fn out_of_bounds<P: PixelSource + ?Sized>(p: &P, x: f64, y: f64) -> bool {
    let t = EDGE_TOLERANCE;
    // Negated comparisons so NaN lands on the border too.
    !(x >= -t && y >= -t && x <= (p.width() - 1) as f64 + t && y <= (p.height() - 1) as f64 + t)
}

/// Catmull-Rom sample; positions outside `[0, w-1] x [0, h-1]` yield `border`.
#[inline]
pub fn bicubic_sample_with<P: PixelSource + ?Sized>(p: &P, x: f64, y: f64, border: f64) -> f64 {
    if out_of_bounds(p, x, y) {
        return border;
    }
    cubic_clamped(p, x, y)
}

/// Catmull-Rom sample with the default border value 0.
#[inline]
pub fn bicubic_sample(p: &ImagePlane, x: f64, y: f64) -> f64 {
    bicubic_sample_with(p, x, y, 0.0)
}

/// Value and spatial gradient `(v, dv/dx, dv/dy)` of the bicubic interpolant.
/// Outside the domain the value is `border` and the gradient is zero.
#[inline]
pub fn bicubic_sample_grad<P: PixelSource + ?Sized>(
    p: &P,
    x: f64,
    y: f64,
    border: f64,
) -> (f64, f64, f64) {
    if out_of_bounds(p, x, y) {
        return (border, 0.0, 0.0);
    }
    let (xi, tx) = taps(x, p.width());
    let (yi, ty) = taps(y, p.height());
    let wx = cubic_weights(tx);
    let wy = cubic_weights(ty);
    let dwx = cubic_weight_derivs(tx);
    let dwy = cubic_weight_derivs(ty);
    let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
    for j in 0..4 {
        let (mut row, mut drow) = (0.0, 0.0);
        for i in 0..4 {
            let s = p.pixel(xi[i], yi[j]);
            row += wx[i] * s;
            drow += dwx[i] * s;
        }
        v += wy[j] * row;
        gx += wy[j] * drow;
        gy += dwy[j] * row;
    }
    (v, gx, gy)
}

/// Bilinear sample with indices clamped to the image.
#[inline]
pub fn bilinear_clamped<P: PixelSource + ?Sized>(p: &P, x: f64, y: f64) -> f64 {
    let w = p.width();
    let h = p.height();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;
    let top = p.pixel(x0, y0) * (1.0 - tx) + p.pixel(x1, y0) * tx;
    let bottom = p.pixel(x0, y1) * (1.0 - tx) + p.pixel(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}
