use crate::error::{Error, Result};

/// Single-channel raster, row-major, values nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "plane data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn max_side(&self) -> usize {
        self.width.max(self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Copy of the rectangle `[x0, x0+w) x [y0, y0+h)`, which must lie inside the plane.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> ImagePlane {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        ImagePlane {
            width: w,
            height: h,
            data,
        }
    }

    /// Places this plane at the top-left of a `width x height` canvas filled with `fill`.
    pub fn pad_to(&self, width: usize, height: usize, fill: f64) -> ImagePlane {
        assert!(width >= self.width && height >= self.height);
        let mut out = ImagePlane::filled(width, height, fill);
        for y in 0..self.height {
            out.data[y * width..y * width + self.width].copy_from_slice(self.row(y));
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        ImagePlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// 8-bit interleaved RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != 3 * width * height {
            return Err(Error::InvalidArgument(format!(
                "RGB data length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(3 * width * height)
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    /// Replicates a grayscale plane into three channels, rounding half to even.
    pub fn from_plane(p: &ImagePlane) -> Self {
        let data = p
            .data()
            .iter()
            .flat_map(|&v| {
                let q = quantize_u8(v);
                [q, q, q]
            })
            .collect();
        Self {
            width: p.width(),
            height: p.height(),
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Channel `c` as a plane scaled to `[0, 1]`.
    pub fn channel(&self, c: usize) -> ImagePlane {
        assert!(c < 3);
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| px[c] as f64 / 255.0)
            .collect();
        ImagePlane {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Maps `[0, 1]` to `0..=255`, rounding half to even and clamping.
pub fn quantize_u8(v: f64) -> u8 {
    let s = (v * 255.0).clamp(0.0, 255.0);
    s.round_ties_even() as u8
}

/// Dimensions with the same aspect ratio whose longer side equals `max_side`.
pub fn fit_dims(width: usize, height: usize, max_side: usize) -> (usize, usize) {
    let long = width.max(height) as f64;
    let scale = max_side as f64 / long;
    let w = ((width as f64 * scale).round() as usize).max(1);
    let h = ((height as f64 * scale).round() as usize).max(1);
    if width >= height {
        (max_side, h.min(max_side))
    } else {
        (w.min(max_side), max_side)
    }
}
