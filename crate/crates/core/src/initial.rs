//! Exhaustive multi-scale, multi-angle affine search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    self, classical_match, detect_and_describe, external_match, match_features, mean_error, robust_affine, Descriptor,
    Keypoint, MatchSet,
};
use crate::geometry::{compose, rotation_about_center, AffineTransform};
use crate::imaging::{fit_dims, resample_antialiased, ImagePlane, ResampleMode};
use crate::nonrigid::warp_affine;

pub use crate::features::estimate_affine_least_squares;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Classical,
    /// Shell command speaking the external matcher protocol.
    Adapter(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialAlignmentConfig {
    /// Max-side lengths of the search resolutions.
    pub scales: Vec<usize>,
    pub angle_step: f64,
    pub min_matches: usize,
    pub backend: Backend,
    pub max_keypoints: usize,
    pub ratio: f64,
    pub ransac_tol: f64,
    pub ransac_iterations: usize,
    pub seed: u64,
}

impl Default for InitialAlignmentConfig {
    fn default() -> Self {
        Self {
            scales: vec![256, 362, 512, 724, 1024, 1448, 2048, 2896],
            angle_step: 30.0,
            min_matches: 8,
            backend: Backend::Classical,
            max_keypoints: 1024,
            ratio: features::DEFAULT_RATIO,
            ransac_tol: features::DEFAULT_INLIER_TOL,
            ransac_iterations: features::DEFAULT_ITERATIONS,
            seed: features::DEFAULT_SEED,
        }
    }
}

impl InitialAlignmentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.scales.is_empty() || self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("scales must be nonempty and strictly increasing: {:?}", self.scales));
        }
        if self.scales[0] == 0 {
            return bad("scales must be positive".into());
        }
        if !(self.angle_step > 0.0 && self.angle_step <= 360.0) {
            return bad(format!("angle_step must be in (0, 360], got {}", self.angle_step));
        }
        if self.min_matches < 3 {
            return bad(format!("min_matches must be at least 3, got {}", self.min_matches));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return bad(format!("ratio must be in (0, 1), got {}", self.ratio));
        }
        if !(self.ransac_tol > 0.0) {
            return bad(format!("ransac_tol must be positive, got {}", self.ransac_tol));
        }
        Ok(())
    }

    /// Search angles `0, step, 2 step, ...` below 360.
    pub fn angles(&self) -> Vec<f64> {
        let n = (360.0 / self.angle_step - 1e-9).ceil().max(1.0) as usize;
        (0..n).map(|k| k as f64 * self.angle_step).collect()
    }

    /// Configured scales clamped to the larger input side, deduplicated.
    pub fn effective_scales(&self, max_input_side: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self.scales.iter().map(|&s| s.min(max_input_side)).collect();
        s.dedup();
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateResult {
    pub scale: usize,
    pub angle: f64,
    pub match_count: usize,
    pub raw_matches: usize,
    /// Maps target pixels to source pixels, both at this candidate's scale.
    pub affine_at_scale: AffineTransform,
    pub mean_inlier_error: f64,
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Winner {
    pub scale: usize,
    pub angle: f64,
    pub match_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitialAlignmentReport {
    pub winner: Option<Winner>,
    pub candidates: Vec<CandidateResult>,
    pub fallback_identity: bool,
    pub affine: AffineTransform,
    /// Candidates whose external matcher failed and were evaluated classically.
    pub adapter_fallbacks: Vec<String>,
}

type Features = Vec<(Keypoint, Descriptor)>;

struct ScaleLevel {
    scale: usize,
    src: ImagePlane,
    tgt: ImagePlane,
    tgt_features: Option<Features>,
}

fn prepare_scale(src: &ImagePlane, tgt: &ImagePlane, scale: usize, cfg: &InitialAlignmentConfig) -> ScaleLevel {
    let shrink = |p: &ImagePlane| {
        let (w, h) = fit_dims(p.width(), p.height(), scale);
        resample_antialiased(p, w, h, ResampleMode::Bilinear)
    };
    let tgt = shrink(tgt);
    let tgt_features = match cfg.backend {
        Backend::Classical => Some(detect_and_describe(&tgt, cfg.max_keypoints)),
        Backend::Adapter(_) => None,
    };
    ScaleLevel { scale, src: shrink(src), tgt, tgt_features }
}

fn candidate(level: &ScaleLevel, angle: f64, cfg: &InitialAlignmentConfig) -> CandidateResult {
    let (sw, sh) = level.src.dims();
    let rot = rotation_about_center(angle, sw, sh);
    let rotated = if angle == 0.0 { level.src.clone() } else { warp_affine(&level.src, &rot, sw, sh) };

    let mut note = None;
    let classical = |rotated: &ImagePlane| match &level.tgt_features {
        Some(tf) => match_features(&detect_and_describe(rotated, cfg.max_keypoints), tf, cfg.ratio),
        None => classical_match(rotated, &level.tgt, cfg.max_keypoints, cfg.ratio),
    };
    let (ms, rank_raw): (MatchSet, bool) = match &cfg.backend {
        Backend::Classical => (classical(&rotated), false),
        Backend::Adapter(cmd) => match external_match(cmd, &rotated, &level.tgt, cfg.max_keypoints) {
            Ok(ms) => (ms, true),
            Err(e) => {
                note = Some(format!("adapter fallback: {e}"));
                (classical(&rotated), false)
            }
        },
    };

    let mut out = CandidateResult {
        scale: level.scale,
        angle,
        match_count: 0,
        raw_matches: ms.len(),
        affine_at_scale: rot,
        mean_inlier_error: f64::INFINITY,
        backend: ms.backend_id.clone(),
        note,
    };
    let append = |note: &mut Option<String>, msg: String| {
        *note = Some(match note.take() {
            Some(n) => format!("{n}; {msg}"),
            None => msg,
        });
    };
    match robust_affine(&ms, cfg.ransac_tol, cfg.ransac_iterations, cfg.seed) {
        Ok((m, inliers)) => {
            let count = if rank_raw { ms.len() } else { inliers.len() };
            out.affine_at_scale = compose(&m, &rot);
            out.mean_inlier_error = mean_error(&m, &ms, &inliers);
            if count >= cfg.min_matches {
                out.match_count = count;
            } else {
                append(&mut out.note, format!("{count} matches below minimum {}", cfg.min_matches));
            }
        }
        Err(e) => append(&mut out.note, e.to_string()),
    }
    out
}

/// Features, matching and consensus for one (scale, angle) pair. Failures
/// fold into `match_count = 0` with a note.
pub fn evaluate_candidate(
    src: &ImagePlane,
    tgt: &ImagePlane,
    scale: usize,
    angle: f64,
    cfg: &InitialAlignmentConfig,
) -> CandidateResult {
    candidate(&prepare_scale(src, tgt, scale, cfg), angle, cfg)
}

/// Index of the best candidate: most matches, then lower mean inlier error,
/// larger scale, smaller angle. `None` when no candidate has matches.
pub fn select_winner(candidates: &[CandidateResult]) -> Option<usize> {
    use std::cmp::Ordering;
    let better = |a: &CandidateResult, b: &CandidateResult| -> Ordering {
        a.match_count
            .cmp(&b.match_count)
            .then(b.mean_inlier_error.total_cmp(&a.mean_inlier_error))
            .then(a.scale.cmp(&b.scale))
            .then(b.angle.total_cmp(&a.angle))
    };
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.match_count > 0)
        .max_by(|(_, a), (_, b)| better(a, b))
        .map(|(i, _)| i)
}

/// Evaluates every (scale, angle) candidate and returns the winning affine,
/// re-expressed between the input frames of `tgt` and `src`.
pub fn run_initial_alignment(
    src: &ImagePlane,
    tgt: &ImagePlane,
    cfg: &InitialAlignmentConfig,
) -> Result<(AffineTransform, InitialAlignmentReport)> {
    cfg.validate()?;
    let scales = cfg.effective_scales(src.max_side().max(tgt.max_side()));
    let angles = cfg.angles();
    let levels: Vec<ScaleLevel> = scales.par_iter().map(|&s| prepare_scale(src, tgt, s, cfg)).collect();
    let jobs: Vec<(usize, f64)> = (0..levels.len())
        .flat_map(|l| angles.iter().map(move |&a| (l, a)))
        .collect();
    let candidates: Vec<CandidateResult> = jobs
        .par_iter()
        .map(|&(l, a)| candidate(&levels[l], a, cfg))
        .collect();

    let adapter_fallbacks = candidates
        .iter()
        .filter_map(|c| {
            c.note
                .as_ref()
                .filter(|n| n.starts_with("adapter fallback"))
                .map(|n| format!("scale {} angle {}: {n}", c.scale, c.angle))
        })
        .collect();

    let (affine, winner) = match select_winner(&candidates) {
        Some(i) => {
            let c = &candidates[i];
            let level = &levels[scales.iter().position(|&s| s == c.scale).expect("scale present")];
            let a = c.affine_at_scale.rescaled(level.tgt.dims(), level.src.dims(), tgt.dims(), src.dims());
            let w = Winner { scale: c.scale, angle: c.angle, match_count: c.match_count };
            (a, Some(w))
        }
        None => (AffineTransform::identity(), None),
    };
    if winner.is_none() {
        log::warn!("no alignment candidate reached {} matches; using identity", cfg.min_matches);
    }
    let report = InitialAlignmentReport {
        fallback_identity: winner.is_none(),
        winner,
        candidates,
        affine,
        adapter_fallbacks,
    };
    Ok((affine, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(count: usize, err: f64, scale: usize, angle: f64) -> CandidateResult {
        CandidateResult {
            scale,
            angle,
            match_count: count,
            raw_matches: count,
            affine_at_scale: AffineTransform::translation(scale as f64, angle),
            mean_inlier_error: err,
            backend: "t".into(),
            note: None,
        }
    }

    #[test]
    fn config_json_defaults_and_backend_forms() {
        let c: InitialAlignmentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, InitialAlignmentConfig::default());
        let c: InitialAlignmentConfig = serde_json::from_str(r#"{"backend":{"adapter":"./m.sh"}}"#).unwrap();
        assert_eq!(c.backend, Backend::Adapter("./m.sh".into()));
        let c: InitialAlignmentConfig = serde_json::from_str(r#"{"backend":"classical"}"#).unwrap();
        assert_eq!(c.backend, Backend::Classical);
        assert!(serde_json::from_str::<InitialAlignmentConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn validation() {
        let ok = InitialAlignmentConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            InitialAlignmentConfig { scales: vec![512, 256], ..ok.clone() },
            InitialAlignmentConfig { angle_step: 0.0, ..ok.clone() },
            InitialAlignmentConfig { angle_step: 400.0, ..ok.clone() },
            InitialAlignmentConfig { min_matches: 2, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn angle_grid() {
        let c = InitialAlignmentConfig::default();
        assert_eq!(c.angles().len(), 12);
        assert_eq!(c.angles()[11], 330.0);
        let c = InitialAlignmentConfig { angle_step: 180.0, ..c };
        assert_eq!(c.angles(), vec![0.0, 180.0]);
        let c = InitialAlignmentConfig { angle_step: 360.0, ..c };
        assert_eq!(c.angles(), vec![0.0]);
    }

    #[test]
    fn scale_clamping() {
        let c = InitialAlignmentConfig::default();
        assert_eq!(c.effective_scales(512), vec![256, 362, 512]);
        assert_eq!(c.effective_scales(300), vec![256, 300]);
    }

    #[test]
    fn winner_tie_breaking() {
        let cs = vec![
            cand(10, 1.0, 256, 0.0),
            cand(12, 2.0, 256, 30.0),
            cand(12, 1.5, 256, 60.0),
            cand(12, 1.5, 512, 90.0),
            cand(12, 1.5, 512, 30.0),
            cand(0, 0.0, 1024, 0.0),
        ];
        let w = select_winner(&cs).unwrap();
        assert_eq!((cs[w].scale, cs[w].angle), (512, 30.0));
        let mut rev = cs.clone();
        rev.reverse();
        let w2 = select_winner(&rev).unwrap();
        assert_eq!(rev[w2], cs[w]);
        assert_eq!(select_winner(&[cand(0, 0.0, 256, 0.0)]), None);
    }

    #[test]
    fn constant_images_fall_back_to_identity() {
        let p = ImagePlane::filled(96, 80, 0.5);
        let cfg = InitialAlignmentConfig { scales: vec![64, 96], angle_step: 90.0, ..Default::default() };
        let (a, rep) = run_initial_alignment(&p, &p, &cfg).unwrap();
        assert_eq!(a, AffineTransform::identity());
        assert!(rep.fallback_identity);
        assert!(rep.winner.is_none());
        assert_eq!(rep.candidates.len(), 8);
        assert!(rep.candidates.iter().all(|c| c.match_count == 0 && c.note.is_some()));
        let c = evaluate_candidate(&p, &p, 96, 0.0, &cfg);
        assert_eq!(c.match_count, 0);
    }
}
