//! Multilevel instance optimization of a dense displacement field.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{affine_to_displacement, AffineTransform};
use crate::imaging::{fit_dims, resample_antialiased, ImagePlane, ResampleMode};

use super::bspline::upsample_field;
use super::field::DisplacementField;
use super::folding::folding_ratio;
use super::objective::objective;
use super::warp::warp;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    /// Longer side of the level, in pixels.
    pub max_side: usize,
    pub iterations: usize,
    /// Base step of the optimizer, in pixels.
    pub learning_rate: f64,
    /// Weight of the diffusive regularizer.
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonrigidConfig {
    /// Coarse to fine.
    pub levels: Vec<LevelConfig>,
    pub ncc_window: usize,
}

impl Default for NonrigidConfig {
    fn default() -> Self {
        Self::with_sides(&[512, 1024, 2048])
    }
}

impl NonrigidConfig {
    /// Default schedule (100 iterations per level, step 2/1/0.5 px, weight
    /// 0.25/0.5/1.0) on a custom three-level ladder. Fewer or more sides reuse
    /// the schedule from its coarse end.
    pub fn with_sides(sides: &[usize]) -> Self {
        const RATES: [f64; 3] = [2.0, 1.0, 0.5];
        const THETAS: [f64; 3] = [0.25, 0.5, 1.0];
        let levels = sides
            .iter()
            .enumerate()
            .map(|(i, &max_side)| LevelConfig {
                max_side,
                iterations: 100,
                learning_rate: RATES[i.min(2)],
                theta: THETAS[i.min(2)],
            })
            .collect();
        Self {
            levels,
            ncc_window: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("nonrigid config needs at least one level".into()));
        }
        if self.levels.windows(2).any(|w| w[1].max_side <= w[0].max_side) {
            return Err(Error::InvalidArgument("level sizes must be strictly increasing".into()));
        }
        for l in &self.levels {
            if l.max_side == 0 || !(l.learning_rate > 0.0) || !(l.theta >= 0.0) {
                return Err(Error::InvalidArgument(format!("invalid level {l:?}")));
            }
        }
        if self.ncc_window < 3 || self.ncc_window % 2 == 0 {
            return Err(Error::InvalidArgument("NCC window must be odd and at least 3".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub field: DisplacementField,
    /// Objective before every step, plus the objective of the last iterate.
    pub trace: Vec<f64>,
    pub best_index: usize,
}

/// Runs exactly `lc.iterations` Adam steps from `u0` and returns the iterate
/// with the lowest objective.
pub fn optimize_level(
    src: &ImagePlane,
    tgt: &ImagePlane,
    u0: &DisplacementField,
    lc: &LevelConfig,
    window: usize,
) -> Result<LevelOutcome> {
    let n = u0.width() * u0.height();
    let mut u = u0.clone();
    let mut m = vec![0.0; 2 * n];
    let mut v = vec![0.0; 2 * n];
    let mut trace = Vec::with_capacity(lc.iterations + 1);
    let mut best = (f64::INFINITY, 0usize, u0.clone());

    for step in 0..=lc.iterations {
        let obj = objective(src, tgt, &u, lc.theta, window)?;
        trace.push(obj.value);
        if obj.value < best.0 {
            best = (obj.value, step, u.clone());
        }
        if step == lc.iterations {
            break;
        }
        let t = (step + 1) as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        let (ux, uy) = u.channels_mut();
        for (k, g) in obj.grad_x.iter().chain(&obj.grad_y).enumerate() {
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
            let delta = lc.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
            if k < n {
                ux[k] -= delta;
            } else {
                uy[k - n] -= delta;
            }
        }
    }
    Ok(LevelOutcome {
        field: best.2,
        trace,
        best_index: best.1,
    })
}

#[derive(Clone, Debug)]
pub struct RegistrationResult {
    /// Residual field at the finest level, applied after the initial affine.
    pub field: DisplacementField,
    pub per_level_objective_trace: Vec<Vec<f64>>,
    pub folding_ratio: f64,
}

/// Level dimensions for a plane of size `dims`; levels never exceed the plane.
pub fn level_dims(dims: (usize, usize), max_side: usize) -> (usize, usize) {
    let side = max_side.min(dims.0.max(dims.1));
    fit_dims(dims.0, dims.1, side)
}

/// Coarse-to-fine registration of `src` onto `tgt` (same size). The source is
/// pre-warped by `init` and only the residual field is optimized
/// and regularized; the field is carried to the next level by B-spline upsampling.
pub fn register_multilevel(
    src: &ImagePlane,
    tgt: &ImagePlane,
    init: &AffineTransform,
    cfg: &NonrigidConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    if src.dims() != tgt.dims() {
        return Err(Error::ShapeMismatch {
            expected: tgt.dims(),
            actual: src.dims(),
        });
    }
    let full = src.dims();
    // Pre-warp once at full resolution so both images reach every level
    // through the same low-pass path (frame edges blur alike).
    let moved_full = warp(src, &affine_to_displacement(init, full.0, full.1))?;
    let mut u: Option<DisplacementField> = None;
    let mut traces = Vec::with_capacity(cfg.levels.len());
    for lc in &cfg.levels {
        let (w, h) = level_dims(full, lc.max_side);
        let moved = resample_antialiased(&moved_full, w, h, ResampleMode::Bilinear);
        let t = resample_antialiased(tgt, w, h, ResampleMode::Bilinear);
        let u0 = match u.take() {
            None => DisplacementField::zeros(w, h),
            Some(prev) => upsample_field(&prev, w, h),
        };
        let outcome = optimize_level(&moved, &t, &u0, lc, cfg.ncc_window)?;
        debug!(
            "level {w}x{h}: objective {:.6} -> {:.6} (best at step {})",
            outcome.trace[0], outcome.trace[outcome.best_index], outcome.best_index
        );
        traces.push(outcome.trace);
        u = Some(outcome.field);
    }
    let field = u.expect("at least one level");
    Ok(RegistrationResult {
        folding_ratio: folding_ratio(&field),
        field,
        per_level_objective_trace: traces,
    })
}
