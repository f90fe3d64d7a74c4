use std::fs;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use super::select_pyramid_level;
use crate::error::{Error, Result};
use crate::geometry::AffineTransform;
use crate::imaging::pyramid::{
    downsample_half, write_manifest, write_tile, LevelStorage, ManifestLevel, PyramidLevel, PyramidManifest,
    DEFAULT_TILE_PATTERN,
};
use crate::imaging::{bicubic_sample_with, fit_dims, quantize_u8, ImagePlane, PyramidImage, Region, RgbImage};
use crate::nonrigid::{upsample_field, DisplacementField, FieldUpsampler};

pub const OUTPUT_TILE: usize = 1024;
/// Output pyramids are halved until the longer side is at most this.
pub const OUTPUT_MIN_SIDE: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileRect {
    pub col: usize,
    pub row: usize,
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

/// Everything needed to evaluate the output-resolution backward mapping
/// `p -> A_o(p + u_o(p))` into one source pyramid level.
#[derive(Clone, Debug)]
pub struct WarpPlan {
    pub out_dims: (usize, usize),
    pub src_level: usize,
    pub src_level_dims: (usize, usize),
    /// Output pixels (after the field) to source-level pixels.
    pub affine: AffineTransform,
    /// Set when the requested side exceeded the source's level 0.
    pub clamped: bool,
    field: DisplacementField,
    upsampler: FieldUpsampler,
}

impl WarpPlan {
    /// `field` lives on the registration canvas; `affine` maps canvas target
    /// pixels to registration-resolution source pixels.
    pub fn new(src: &PyramidImage, field: &DisplacementField, affine: &AffineTransform, out_side: usize) -> Result<Self> {
        if out_side == 0 {
            return Err(Error::InvalidArgument("output side must be positive".into()));
        }
        let canvas = field.dims();
        let (w0, h0) = src.level0_dims();
        let src_reg = fit_dims(w0, h0, canvas.0.max(canvas.1));
        let max_out = w0.max(h0);
        let clamped = out_side > max_out;
        let side = if clamped {
            warn!("requested output side {out_side} exceeds source level 0 ({max_out}); clamping");
            max_out
        } else {
            out_side
        };
        let out_dims = fit_dims(canvas.0, canvas.1, side);
        let (src_level, _) = select_pyramid_level(src, side);
        let lvl = src.level(src_level);
        let src_level_dims = (lvl.width, lvl.height);
        Ok(Self {
            out_dims,
            src_level,
            src_level_dims,
            affine: affine.rescaled(canvas, src_reg, out_dims, src_level_dims),
            clamped,
            field: field.clone(),
            upsampler: FieldUpsampler::new(field, out_dims.0, out_dims.1),
        })
    }

    /// Source-level position sampled by output pixel `(x, y)`, with the field
    /// evaluated on demand.
    #[inline]
    pub fn map(&self, x: usize, y: usize) -> (f64, f64) {
        let (dx, dy) = self.upsampler.at_point(x as f64, y as f64);
        self.affine.apply_xy(x as f64 + dx, y as f64 + dy)
    }

    pub fn tiles(&self, tile: usize) -> Vec<TileRect> {
        let (w, h) = self.out_dims;
        let mut out = Vec::new();
        for row in 0..h.div_ceil(tile) {
            for col in 0..w.div_ceil(tile) {
                let (x0, y0) = (col * tile, row * tile);
                out.push(TileRect { col, row, x0, y0, w: tile.min(w - x0), h: tile.min(h - y0) });
            }
        }
        out
    }

    /// Warps tile by tile, reading only the source window each tile needs, and
    /// hands every tile's RGB values in [0, 1] (before quantization) to `sink`
    /// in row-major tile order.
    pub fn for_each_tile(
        &self,
        src: &PyramidImage,
        tile: usize,
        mut sink: impl FnMut(TileRect, [Vec<f64>; 3]) -> Result<()>,
    ) -> Result<()> {
        let (lw, lh) = self.src_level_dims;
        for rect in self.tiles(tile) {
            let pos: Vec<(f64, f64)> = (rect.y0..rect.y0 + rect.h)
                .into_par_iter()
                .flat_map_iter(|y| (rect.x0..rect.x0 + rect.w).map(move |x| (x, y)))
                .map(|(x, y)| self.map(x, y))
                .collect();
            let inside = |&&(x, y): &&(f64, f64)| {
                x >= -1.0 && y >= -1.0 && x <= lw as f64 && y <= lh as f64
            };
            let mut bbox: Option<(f64, f64, f64, f64)> = None;
            for &(x, y) in pos.iter().filter(inside) {
                bbox = Some(match bbox {
                    None => (x, y, x, y),
                    Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                });
            }
            let channels = match bbox {
                None => {
                    let n = rect.w * rect.h;
                    [vec![0.0; n], vec![0.0; n], vec![0.0; n]]
                }
                Some((minx, miny, maxx, maxy)) => {
                    let clampi = |v: f64, n: usize| (v as isize).clamp(0, n as isize - 1) as usize;
                    let x0 = clampi(minx.floor() - 1.0, lw);
                    let y0 = clampi(miny.floor() - 1.0, lh);
                    let x1 = clampi(maxx.floor() + 2.0, lw);
                    let y1 = clampi(maxy.floor() + 2.0, lh);
                    let rgb = src.read_region(self.src_level, x0, y0, x1 - x0 + 1, y1 - y0 + 1)?;
                    let planes = split_rgb(&rgb);
                    let regions: Vec<Region> = planes
                        .iter()
                        .map(|d| Region {
                            x0,
                            y0,
                            w: rgb.width(),
                            h: rgb.height(),
                            full_width: lw,
                            full_height: lh,
                            data: d,
                        })
                        .collect();
                    let sample = |c: usize| -> Vec<f64> {
                        pos.par_iter().map(|&(x, y)| bicubic_sample_with(&regions[c], x, y, 0.0)).collect()
                    };
                    [sample(0), sample(1), sample(2)]
                }
            };
            sink(rect, channels)?;
        }
        Ok(())
    }
}

fn split_rgb(img: &RgbImage) -> [Vec<f64>; 3] {
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for (c, plane) in out.iter_mut().enumerate() {
        *plane = img.data().iter().skip(c).step_by(3).map(|&v| v as f64 / 255.0).collect();
    }
    out
}

/// Reference path: materializes the whole source level and the whole
/// upsampled field, then samples every output pixel.
pub fn warp_monolithic(plan: &WarpPlan, src: &PyramidImage) -> Result<[ImagePlane; 3]> {
    let (w, h) = plan.out_dims;
    let u = upsample_field(&plan.field, w, h);
    let rgb = src.read_level(plan.src_level)?;
    let planes = split_rgb(&rgb);
    let (lw, lh) = plan.src_level_dims;
    let mut out = Vec::with_capacity(3);
    for data in &planes {
        let source = ImagePlane::new(lw, lh, data.clone())?;
        let mut values = vec![0.0; w * h];
        values.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, v) in row.iter_mut().enumerate() {
                let (dx, dy) = u.get(x, y);
                let (sx, sy) = plan.affine.apply_xy(x as f64 + dx, y as f64 + dy);
                *v = bicubic_sample_with(&source, sx, sy, 0.0);
            }
        });
        out.push(ImagePlane::new(w, h, values)?);
    }
    let [r, g, b]: [ImagePlane; 3] = out.try_into().expect("three channels");
    Ok([r, g, b])
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarpOutcome {
    pub manifest: PyramidManifest,
    pub src_level: usize,
    pub clamped: bool,
}

fn quantize_tile(rect: &TileRect, ch: &[Vec<f64>; 3]) -> RgbImage {
    let n = rect.w * rect.h;
    let mut data = Vec::with_capacity(3 * n);
    for i in 0..n {
        for c in ch {
            data.push(quantize_u8(c[i]));
        }
    }
    RgbImage::new(rect.w, rect.h, data).expect("tile dims")
}

/// Warps `src` into the registration's target frame at an output longer side
/// of `out_side` and writes it as a tiled pyramid directory at `out`.
pub fn full_res_warp(
    src: &PyramidImage,
    field: &DisplacementField,
    affine: &AffineTransform,
    out_side: usize,
    out: &Path,
) -> Result<WarpOutcome> {
    let plan = WarpPlan::new(src, field, affine, out_side)?;
    fs::create_dir_all(out).map_err(|e| Error::write_failure(out, e))?;
    plan.for_each_tile(src, OUTPUT_TILE, |rect, ch| {
        write_tile(out, DEFAULT_TILE_PATTERN, 0, rect.col, rect.row, &quantize_tile(&rect, &ch))
    })?;

    let level_entry = |level, (width, height): (usize, usize)| ManifestLevel {
        level,
        width,
        height,
        tile_size: OUTPUT_TILE,
        path_pattern: DEFAULT_TILE_PATTERN.to_string(),
    };
    let mut levels = vec![level_entry(0, plan.out_dims)];
    let mut dims = plan.out_dims;
    while dims.0.max(dims.1) > OUTPUT_MIN_SIDE {
        let prev = levels.len() - 1;
        let written = PyramidImage::new(
            vec![PyramidLevel::new(
                dims.0,
                dims.1,
                LevelStorage::Tiled {
                    dir: out.to_path_buf(),
                    level: prev,
                    tile_size: OUTPUT_TILE,
                    path_pattern: DEFAULT_TILE_PATTERN.to_string(),
                },
            )],
            None,
        )?;
        let next = (dims.0.div_ceil(2), dims.1.div_ceil(2));
        for row in 0..next.1.div_ceil(OUTPUT_TILE) {
            for col in 0..next.0.div_ceil(OUTPUT_TILE) {
                let (x0, y0) = (2 * col * OUTPUT_TILE, 2 * row * OUTPUT_TILE);
                let w = (2 * OUTPUT_TILE).min(dims.0 - x0);
                let h = (2 * OUTPUT_TILE).min(dims.1 - y0);
                let half = downsample_half(&written.read_region(0, x0, y0, w, h)?);
                write_tile(out, DEFAULT_TILE_PATTERN, prev + 1, col, row, &half)?;
            }
        }
        levels.push(level_entry(prev + 1, next));
        dims = next;
    }
    // Output pixels live in the target frame; the source spacing does not carry over.
    let manifest = PyramidManifest { levels, spacing_level0: None };
    write_manifest(out, &manifest)?;
    Ok(WarpOutcome { manifest, src_level: plan.src_level, clamped: plan.clamped })
}
