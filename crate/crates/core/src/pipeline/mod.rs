//! End-to-end orchestration: level selection, preprocessing, registration of
//! a pair, full-resolution warping and artifact serialization.

mod report;
mod warp;

use std::path::PathBuf;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{scale_map, AffineTransform, Point2};
use crate::imaging::{
    clahe, fit_dims, normalize_unit, resample_antialiased, to_grayscale, ClaheParams, ImagePlane, PyramidImage,
    ResampleMode,
};
use crate::initial::{run_initial_alignment, InitialAlignmentConfig, InitialAlignmentReport};
use crate::nonrigid::{register_multilevel, upsample_field, ComposedTransform, DisplacementField, NonrigidConfig};

pub use report::{pair_report, round_json, write_json, write_pair_artifacts, AFFINE_FILE, FIELD_FILE, REPORT_FILE};
pub use warp::{full_res_warp, warp_monolithic, TileRect, WarpOutcome, WarpPlan, OUTPUT_MIN_SIDE, OUTPUT_TILE};

pub const MIN_REGISTRATION_SIDE: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub desired_registration_side: usize,
    pub initial: InitialAlignmentConfig,
    pub nonrigid: NonrigidConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            desired_registration_side: 2048,
            initial: InitialAlignmentConfig::default(),
            nonrigid: NonrigidConfig::default(),
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.desired_registration_side < MIN_REGISTRATION_SIDE {
            return Err(Error::InvalidArgument(format!(
                "desired_registration_side must be at least {MIN_REGISTRATION_SIDE}, got {}",
                self.desired_registration_side
            )));
        }
        self.initial.validate()?;
        self.nonrigid.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Smallest level whose longer side still reaches `desired_side`; level 0 and
/// `true` (a warning) when even level 0 is smaller.
pub fn select_pyramid_level(p: &PyramidImage, desired_side: usize) -> (usize, bool) {
    p.levels()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.max_side() >= desired_side)
        .min_by_key(|(i, l)| (l.max_side(), *i))
        .map_or((0, true), |(i, _)| (i, false))
}

/// Pixel frames involved in one registration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frames {
    /// Common registration canvas (target frame, padded).
    pub canvas: (usize, usize),
    pub source_reg: (usize, usize),
    pub target_reg: (usize, usize),
    pub source_level0: (usize, usize),
    pub target_level0: (usize, usize),
}

impl Frames {
    pub fn new(source_level0: (usize, usize), target_level0: (usize, usize), desired_side: usize) -> Self {
        let source_reg = fit_dims(source_level0.0, source_level0.1, desired_side);
        let target_reg = fit_dims(target_level0.0, target_level0.1, desired_side);
        Self {
            canvas: (source_reg.0.max(target_reg.0), source_reg.1.max(target_reg.1)),
            source_reg,
            target_reg,
            source_level0,
            target_level0,
        }
    }

    /// Recovers the frames of a saved registration from its canvas size.
    pub fn from_canvas(canvas: (usize, usize), source_level0: (usize, usize), target_level0: (usize, usize)) -> Self {
        let mut f = Self::new(source_level0, target_level0, canvas.0.max(canvas.1));
        f.canvas = canvas;
        f
    }

    /// Backward map from level-0 target pixels to level-0 source pixels.
    pub fn level0_transform<'a>(&'a self, t: &'a ComposedTransform) -> impl Fn(Point2) -> Point2 + 'a {
        let into_canvas = scale_map(self.target_level0, self.target_reg);
        let out_of_canvas = scale_map(self.source_reg, self.source_level0);
        move |p| out_of_canvas.apply(t.map_point(into_canvas.apply(p)))
    }
}

fn preprocess(p: &PyramidImage, reg_dims: (usize, usize), desired: usize, warnings: &mut Vec<String>) -> Result<ImagePlane> {
    let (level, short) = select_pyramid_level(p, desired);
    if short {
        warnings.push(format!(
            "largest level ({}x{}) is below the desired side {desired}; upsampling",
            p.level(0).width,
            p.level(0).height
        ));
    }
    let rgb = p.read_level(level)?;
    // Grayscale is linear, so converting before resampling is equivalent and
    // needs a third of the interpolation work.
    let gray = to_grayscale(&rgb);
    let resized = resample_antialiased(&gray, reg_dims.0, reg_dims.1, ResampleMode::Bilinear);
    Ok(clahe(&normalize_unit(&resized), ClaheParams::default()))
}

#[derive(Clone, Debug)]
pub struct PreparedPair {
    pub source: ImagePlane,
    pub target: ImagePlane,
    pub frames: Frames,
    pub warnings: Vec<String>,
}

/// Grayscale, [0, 1]-normalized, CLAHE-equalized planes whose longer side is
/// the desired registration side, zero-padded at the bottom/right onto a
/// common canvas.
pub fn load_and_preprocess_pair(src: &PyramidImage, tgt: &PyramidImage, cfg: &PipelineConfig) -> Result<PreparedPair> {
    let desired = cfg.desired_registration_side;
    let frames = Frames::new(src.level0_dims(), tgt.level0_dims(), desired);
    let mut warnings = Vec::new();
    let s = preprocess(src, frames.source_reg, desired, &mut warnings)?;
    let t = preprocess(tgt, frames.target_reg, desired, &mut warnings)?;
    let (cw, ch) = frames.canvas;
    Ok(PreparedPair {
        source: s.pad_to(cw, ch, 0.0),
        target: t.pad_to(cw, ch, 0.0),
        frames,
        warnings,
    })
}

#[derive(Clone, Debug)]
pub struct PairResult {
    /// Canvas target pixels to canvas source pixels.
    pub affine: AffineTransform,
    /// Residual field on the canvas, applied before the affine.
    pub field: DisplacementField,
    pub initial: InitialAlignmentReport,
    pub per_level_objective_trace: Vec<Vec<f64>>,
    pub folding_ratio: f64,
    pub frames: Frames,
    pub warnings: Vec<String>,
}

impl PairResult {
    pub fn transform(&self) -> ComposedTransform {
        ComposedTransform::new(self.affine, Some(&self.field), self.frames.canvas)
    }
}

/// Initial alignment followed by multilevel nonrigid registration on an
/// already prepared pair.
pub fn register_prepared(pair: PreparedPair, cfg: &PipelineConfig) -> Result<PairResult> {
    let (affine, initial) = run_initial_alignment(&pair.source, &pair.target, &cfg.initial)?;
    let mut warnings = pair.warnings;
    if initial.fallback_identity {
        warnings.push("initial alignment found no candidate; identity used".into());
    }
    warnings.extend(initial.adapter_fallbacks.iter().cloned());
    info!(
        "initial alignment: {:?}, rotation {:.2} deg",
        initial.winner,
        affine.rotation_deg()
    );
    let reg = register_multilevel(&pair.source, &pair.target, &affine, &cfg.nonrigid)?;
    let (cw, ch) = pair.frames.canvas;
    let field = upsample_field(&reg.field, cw, ch);
    Ok(PairResult {
        affine,
        field,
        initial,
        per_level_objective_trace: reg.per_level_objective_trace,
        folding_ratio: reg.folding_ratio,
        frames: pair.frames,
        warnings,
    })
}

pub fn register_pair(src: &PyramidImage, tgt: &PyramidImage, cfg: &PipelineConfig) -> Result<PairResult> {
    cfg.validate()?;
    let pair = load_and_preprocess_pair(src, tgt, cfg)?;
    for w in &pair.warnings {
        warn!("{w}");
    }
    register_prepared(pair, cfg)
}
