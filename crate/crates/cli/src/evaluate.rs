use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use gigareg::evaluation::{aggregate, load_landmarks, robustness, tre, LandmarkSet, PairEvaluation};
use gigareg::geometry::{AffineTransform, Point2};
use gigareg::imaging::PyramidImage;
use gigareg::nonrigid::{ComposedTransform, DisplacementField};
use gigareg::pipeline::{write_json, Frames, AFFINE_FILE, FIELD_FILE};
use log::{error, info};
use serde_json::json;

use crate::manifest::{PairEntry, RunManifest};
use crate::RunStatus;

pub const EVALUATION_FILE: &str = "evaluation.json";

struct Evaluated {
    before: PairEvaluation,
    after: PairEvaluation,
    /// Pixel distances, used for robustness.
    before_px: Vec<f64>,
    after_px: Vec<f64>,
    units: &'static str,
}

fn evaluate_one(entry: &PairEntry, dir: &Path) -> Result<Evaluated> {
    let (src_path, tgt_path) = match (&entry.source_landmarks, &entry.target_landmarks) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(anyhow!("pair has no landmark files")),
    };
    let src = PyramidImage::open(&entry.source)?;
    let tgt = PyramidImage::open(&entry.target)?;
    let src_spacing = entry.spacing.or(src.spacing_level0);
    let tgt_spacing = entry.spacing.or(tgt.spacing_level0);
    let src_lm = load_landmarks(src_path, entry.units, src_spacing)?;
    let tgt_lm = load_landmarks(tgt_path, entry.units, tgt_spacing)?;

    let affine_path = dir.join(AFFINE_FILE);
    let text = fs::read_to_string(&affine_path).with_context(|| format!("reading {}", affine_path.display()))?;
    let affine = AffineTransform::from_json(&text)?;
    let field = DisplacementField::read(&dir.join(FIELD_FILE))?;
    let frames = Frames::from_canvas(field.dims(), src.level0_dims(), tgt.level0_dims());
    let t = ComposedTransform::new(affine, Some(&field), frames.canvas);
    let map = frames.level0_transform(&t);
    let mapped: Vec<Point2> = tgt_lm.points.iter().map(|&p| map(p)).collect();
    let warped = tgt_lm.with_points(mapped);
    // Unregistered baseline: target coordinates read directly in the source frame.
    let unregistered = tgt_lm.clone();

    let (spacing, units) = match src_spacing {
        Some(s) => (s, "micrometers"),
        None => (1.0, "pixels"),
    };
    let dims = src.level0_dims();
    let eval = |w: &LandmarkSet| -> Result<(PairEvaluation, Vec<f64>)> {
        let px = tre(w, &src_lm, 1.0)?;
        let phys = tre(w, &src_lm, spacing)?;
        Ok((PairEvaluation::new(phys, &px, dims), px))
    };
    let (before, before_px) = eval(&unregistered)?;
    let (after, after_px) = eval(&warped)?;
    Ok(Evaluated { before, after, before_px, after_px, units })
}

/// TRE/rTRE of every registered pair before and after registration, with
/// dataset aggregates, written to `evaluation.json` in the output root.
pub fn cmd_evaluate(manifest_path: &Path) -> Result<RunStatus> {
    let manifest = RunManifest::load(manifest_path)?;
    let mut rows = Vec::with_capacity(manifest.pairs.len());
    let mut ok = Vec::new();
    for (i, entry) in manifest.pairs.iter().enumerate() {
        let mut row = json!({ "index": i, "source": entry.source, "target": entry.target });
        match evaluate_one(entry, &manifest.pair_dir(i)) {
            Ok(e) => {
                info!(
                    "pair {i}: median TRE {:.4} -> {:.4} {}",
                    e.before.median_tre, e.after.median_tre, e.units
                );
                row["status"] = json!("ok");
                row["units"] = json!(e.units);
                row["before"] = json!(e.before);
                row["after"] = json!(e.after);
                ok.push(e);
            }
            Err(err) => {
                error!("pair {i}: {err:#}");
                row["status"] = json!("error");
                row["error"] = json!(format!("{err:#}"));
            }
        }
        rows.push(row);
    }
    let failures = manifest.pairs.len() - ok.len();
    let mut report = json!({ "pairs": rows, "failures": failures });
    if !ok.is_empty() {
        let before: Vec<_> = ok.iter().map(|e| e.before.clone()).collect();
        let after: Vec<_> = ok.iter().map(|e| e.after.clone()).collect();
        let b: Vec<_> = ok.iter().map(|e| e.before_px.clone()).collect();
        let a: Vec<_> = ok.iter().map(|e| e.after_px.clone()).collect();
        report["before"] = json!(aggregate(&before)?);
        report["after"] = json!(aggregate(&after)?);
        report["robustness"] = json!(robustness(&b, &a)?);
    }
    fs::create_dir_all(&manifest.output).with_context(|| format!("creating {}", manifest.output.display()))?;
    write_json(&manifest.output.join(EVALUATION_FILE), &report)?;
    Ok(RunStatus { pairs: manifest.pairs.len(), failures })
}
