//! Batch front end: `register`, `warp`, `evaluate` and `synth`.

mod evaluate;
mod manifest;
mod register;
mod synth;

use std::path::PathBuf;

use anyhow::{Context, Result};
use gigareg::geometry::AffineTransform;
use gigareg::imaging::PyramidImage;
use gigareg::nonrigid::DisplacementField;
use gigareg::pipeline::full_res_warp;
use log::{info, warn};

pub use evaluate::{cmd_evaluate, EVALUATION_FILE};
pub use manifest::{pair_dir, PairEntry, RunManifest};
pub use register::{cmd_register, load_config, RegisterOptions, RUN_REPORT_FILE};
pub use synth::{cmd_synth, SynthOptions, SYNTH_MANIFEST};

/// Outcome of a batch command: `failures == 0` maps to exit code 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunStatus {
    pub pairs: usize,
    pub failures: usize,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failures > 0)
    }
}

#[derive(Clone, Debug)]
pub struct WarpOptions {
    pub source: PathBuf,
    pub affine: PathBuf,
    pub field: PathBuf,
    pub out: PathBuf,
    pub level_side: usize,
}

pub fn cmd_warp(o: &WarpOptions) -> Result<()> {
    let src = PyramidImage::open(&o.source)?;
    let text = std::fs::read_to_string(&o.affine).with_context(|| format!("reading {}", o.affine.display()))?;
    let affine = AffineTransform::from_json(&text)?;
    let field = DisplacementField::read(&o.field)?;
    let outcome = full_res_warp(&src, &field, &affine, o.level_side, &o.out)?;
    if outcome.clamped {
        warn!(
            "requested side {} exceeds the source level 0; output clamped to {}x{}",
            o.level_side, outcome.manifest.levels[0].width, outcome.manifest.levels[0].height
        );
    }
    info!(
        "wrote {} levels to {} (source level {})",
        outcome.manifest.levels.len(),
        o.out.display(),
        outcome.src_level
    );
    Ok(())
}
