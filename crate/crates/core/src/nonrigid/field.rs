use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Magic prefix of the binary field format.
pub const FIELD_MAGIC: &[u8; 16] = b"GIGAREGFIELDv001";

/// Dense displacement field in pixel units. Backward convention: the warped
/// image samples the source at `(x + ux, y + uy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        Self {
            width,
            height,
            ux: vec![0.0; width * height],
            uy: vec![0.0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || ux.len() != width * height || uy.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "field channels ({}, {}) do not match {width}x{height}",
                ux.len(),
                uy.len()
            )));
        }
        if ux.iter().chain(&uy).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite entries".into()));
        }
        Ok(Self {
            width,
            height,
            ux,
            uy,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> Self {
        let mut field = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                field.set(x, y, a, b);
            }
        }
        field
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
    pub fn ux(&self) -> &[f64] {
        &self.ux
    }

    #[inline]
    pub fn uy(&self) -> &[f64] {
        &self.uy
    }

    pub fn channels_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.ux, &mut self.uy)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.ux[i], self.uy[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ux: f64, uy: f64) {
        let i = y * self.width + x;
        self.ux[i] = ux;
        self.uy[i] = uy;
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.ux.iter().zip(&self.uy).map(|(a, b)| a.hypot(*b))
    }

    pub fn mean_magnitude(&self) -> f64 {
        self.magnitudes().sum::<f64>() / (self.width * self.height) as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().fold(0.0, f64::max)
    }

    /// Binary layout: magic, u32 LE width, u32 LE height, f32 LE `ux` then `uy`, row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.ux.len());
        out.extend_from_slice(FIELD_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in self.ux.iter().chain(&self.uy) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidArgument(format!("bad field binary: {reason}"));
        if bytes.len() < 24 || &bytes[..16] != FIELD_MAGIC {
            return Err(bad("missing magic"));
        }
        let width = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
        let n = width * height;
        if n == 0 || bytes.len() != 24 + 8 * n {
            return Err(bad("length does not match header"));
        }
        let values: Vec<f64> = bytes[24..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let (ux, uy) = values.split_at(n);
        Self::new(width, height, ux.to_vec(), uy.to_vec())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::write_failure(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::unreadable(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::unreadable(path, e))
    }
}
