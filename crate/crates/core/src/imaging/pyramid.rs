//! Multi-resolution slide storage.
//!
//! A pyramid is either a single image file (one level) or a directory holding
//! `pyramid.json` plus per-level tiles named `L{level}_x{col}_y{row}.png`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::io::{image_dimensions, read_rgb, write_rgb_png};
use super::plane::RgbImage;
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "pyramid.json";
pub const DEFAULT_TILE_PATTERN: &str = "L{level}_x{col}_y{row}.png";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestLevel {
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub tile_size: usize,
    pub path_pattern: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidManifest {
    pub levels: Vec<ManifestLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_level0: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum LevelStorage {
    File(PathBuf),
    Tiled {
        dir: PathBuf,
        level: usize,
        tile_size: usize,
        path_pattern: String,
    },
    Memory(Arc<RgbImage>),
}

#[derive(Clone, Debug)]
pub struct PyramidLevel {
    pub width: usize,
    pub height: usize,
    pub storage: LevelStorage,
    cache: OnceLock<Arc<RgbImage>>,
}

impl PyramidLevel {
    pub fn new(width: usize, height: usize, storage: LevelStorage) -> Self {
        Self {
            width,
            height,
            storage,
            cache: OnceLock::new(),
        }
    }

    pub fn max_side(&self) -> usize {
        self.width.max(self.height)
    }
}

#[derive(Clone, Debug)]
pub struct PyramidImage {
    levels: Vec<PyramidLevel>,
    /// Micrometers per pixel at level 0, when known.
    pub spacing_level0: Option<f64>,
}

pub fn tile_path(pattern: &str, level: usize, col: usize, row: usize) -> String {
    pattern
        .replace("{level}", &level.to_string())
        .replace("{col}", &col.to_string())
        .replace("{row}", &row.to_string())
}

impl PyramidImage {
    pub fn new(levels: Vec<PyramidLevel>, spacing_level0: Option<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("pyramid has no levels".into()));
        }
        if levels.windows(2).any(|w| w[1].width > w[0].width) {
            return Err(Error::InvalidArgument(
                "pyramid levels must be ordered by non-increasing width".into(),
            ));
        }
        Ok(Self {
            levels,
            spacing_level0,
        })
    }

    /// Single in-memory level.
    pub fn from_rgb(img: RgbImage) -> Self {
        let (w, h) = (img.width(), img.height());
        Self {
            levels: vec![PyramidLevel::new(w, h, LevelStorage::Memory(Arc::new(img)))],
            spacing_level0: None,
        }
    }

    /// Opens a pyramid directory, a `pyramid.json` path, or a single PNG/TIFF file.
    pub fn open(path: &Path) -> Result<Self> {
        let manifest_path = if path.is_dir() {
            path.join(MANIFEST_NAME)
        } else if path.file_name().is_some_and(|n| n == MANIFEST_NAME) {
            path.to_path_buf()
        } else {
            let (w, h) = image_dimensions(path)?;
            return Ok(Self {
                levels: vec![PyramidLevel::new(w, h, LevelStorage::File(path.to_path_buf()))],
                spacing_level0: None,
            });
        };
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| Error::unreadable(&manifest_path, e))?;
        let manifest: PyramidManifest = serde_json::from_str(&text)
            .map_err(|e| Error::corrupt_manifest(&manifest_path, e))?;
        let dir = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Self::from_manifest(&manifest, &dir)
            .map_err(|e| match e {
                Error::InvalidArgument(reason) => Error::corrupt_manifest(&manifest_path, reason),
                other => other,
            })
    }

    pub fn from_manifest(manifest: &PyramidManifest, dir: &Path) -> Result<Self> {
        let mut levels = Vec::with_capacity(manifest.levels.len());
        for (i, l) in manifest.levels.iter().enumerate() {
            if l.level != i || l.width == 0 || l.height == 0 || l.tile_size == 0 {
                return Err(Error::InvalidArgument(format!("bad level entry {i}")));
            }
            levels.push(PyramidLevel::new(
                l.width,
                l.height,
                LevelStorage::Tiled {
                    dir: dir.to_path_buf(),
                    level: l.level,
                    tile_size: l.tile_size,
                    path_pattern: l.path_pattern.clone(),
                },
            ));
        }
        Self::new(levels, manifest.spacing_level0)
    }

    pub fn levels(&self) -> &[PyramidLevel] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &PyramidLevel {
        &self.levels[i]
    }

    pub fn level0_dims(&self) -> (usize, usize) {
        (self.levels[0].width, self.levels[0].height)
    }

    /// Whole level as one raster.
    pub fn read_level(&self, i: usize) -> Result<Arc<RgbImage>> {
        let lvl = &self.levels[i];
        if let Some(img) = lvl.cache.get() {
            return Ok(img.clone());
        }
        let img = match &lvl.storage {
            LevelStorage::Memory(img) => img.clone(),
            LevelStorage::File(path) => {
                let img = read_rgb(path)?;
                if (img.width(), img.height()) != (lvl.width, lvl.height) {
                    return Err(Error::unreadable(path, "image size changed after open"));
                }
                Arc::new(img)
            }
            LevelStorage::Tiled { .. } => {
                Arc::new(self.read_region(i, 0, 0, lvl.width, lvl.height)?)
            }
        };
        if !matches!(lvl.storage, LevelStorage::Tiled { .. }) {
            let _ = lvl.cache.set(img.clone());
        }
        Ok(img)
    }

    /// Pixels `[x0, x0+w) x [y0, y0+h)` of level `i`; the rectangle must lie inside the level.
    pub fn read_region(&self, i: usize, x0: usize, y0: usize, w: usize, h: usize) -> Result<RgbImage> {
        let lvl = &self.levels[i];
        assert!(x0 + w <= lvl.width && y0 + h <= lvl.height, "region outside level");
        let mut out = vec![0u8; 3 * w * h];
        match &lvl.storage {
            LevelStorage::Tiled {
                dir,
                level,
                tile_size,
                path_pattern,
            } => {
                let ts = *tile_size;
                for row in y0 / ts..(y0 + h).div_ceil(ts) {
                    for col in x0 / ts..(x0 + w).div_ceil(ts) {
                        let path = dir.join(tile_path(path_pattern, *level, col, row));
                        if !path.exists() {
                            return Err(Error::corrupt_manifest(
                                dir.join(MANIFEST_NAME),
                                format!("missing tile {}", path.display()),
                            ));
                        }
                        let tile = read_rgb(&path)?;
                        let tw = ts.min(lvl.width - col * ts);
                        let th = ts.min(lvl.height - row * ts);
                        if (tile.width(), tile.height()) != (tw, th) {
                            return Err(Error::corrupt_manifest(
                                dir.join(MANIFEST_NAME),
                                format!(
                                    "tile {} is {}x{}, expected {tw}x{th}",
                                    path.display(),
                                    tile.width(),
                                    tile.height()
                                ),
                            ));
                        }
                        let (tx0, ty0) = (col * ts, row * ts);
                        let ix0 = x0.max(tx0);
                        let ix1 = (x0 + w).min(tx0 + tw);
                        for y in y0.max(ty0)..(y0 + h).min(ty0 + th) {
                            let src = 3 * ((y - ty0) * tw + (ix0 - tx0));
                            let dst = 3 * ((y - y0) * w + (ix0 - x0));
                            let n = 3 * (ix1 - ix0);
                            out[dst..dst + n].copy_from_slice(&tile.data()[src..src + n]);
                        }
                    }
                }
            }
            _ => {
                let full = self.read_level(i)?;
                for y in 0..h {
                    let src = 3 * ((y0 + y) * lvl.width + x0);
                    out[3 * y * w..3 * (y + 1) * w].copy_from_slice(&full.data()[src..src + 3 * w]);
                }
            }
        }
        RgbImage::new(w, h, out)
    }
}

/// Halves an image with a 2x2 box filter (edge pixels replicated on odd sizes).
pub fn downsample_half(img: &RgbImage) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    let mut data = Vec::with_capacity(3 * nw * nh);
    for y in 0..nh {
        let (ya, yb) = (2 * y, (2 * y + 1).min(h - 1));
        for x in 0..nw {
            let (xa, xb) = (2 * x, (2 * x + 1).min(w - 1));
            let (p, q, r, s) = (img.pixel(xa, ya), img.pixel(xb, ya), img.pixel(xa, yb), img.pixel(xb, yb));
            for c in 0..3 {
                let sum = p[c] as f64 + q[c] as f64 + r[c] as f64 + s[c] as f64;
                data.push((sum / 4.0).round_ties_even() as u8);
            }
        }
    }
    RgbImage::new(nw, nh, data).expect("dimensions are positive")
}

/// Writes one tile of a pyramid level.
pub fn write_tile(dir: &Path, pattern: &str, level: usize, col: usize, row: usize, tile: &RgbImage) -> Result<()> {
    write_rgb_png(&dir.join(tile_path(pattern, level, col, row)), tile)
}

pub fn write_manifest(dir: &Path, manifest: &PyramidManifest) -> Result<()> {
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::write_failure(&path, e))
}

/// Stores an in-memory image as a tiled pyramid, halving until the longer side
/// is at most `min_side`.
pub fn write_pyramid(dir: &Path, img: &RgbImage, tile_size: usize, min_side: usize, spacing_level0: Option<f64>) -> Result<PyramidManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::write_failure(dir, e))?;
    let mut levels = Vec::new();
    let mut current = img.clone();
    let mut level = 0;
    loop {
        let (w, h) = (current.width(), current.height());
        for row in 0..h.div_ceil(tile_size) {
            for col in 0..w.div_ceil(tile_size) {
                let (tx, ty) = (col * tile_size, row * tile_size);
                let (tw, th) = (tile_size.min(w - tx), tile_size.min(h - ty));
                let mut data = Vec::with_capacity(3 * tw * th);
                for y in ty..ty + th {
                    data.extend_from_slice(&current.data()[3 * (y * w + tx)..3 * (y * w + tx + tw)]);
                }
                write_tile(dir, DEFAULT_TILE_PATTERN, level, col, row, &RgbImage::new(tw, th, data)?)?;
            }
        }
        levels.push(ManifestLevel {
            level,
            width: w,
            height: h,
            tile_size,
            path_pattern: DEFAULT_TILE_PATTERN.to_string(),
        });
        if w.max(h) <= min_side || w.max(h) == 1 {
            break;
        }
        current = downsample_half(&current);
        level += 1;
    }
    let manifest = PyramidManifest {
        levels,
        spacing_level0,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}
