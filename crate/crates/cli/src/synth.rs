use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gigareg::evaluation::Units;
use gigareg::imaging::io::write_gray_png;
use gigareg::synth::{generate, CaseParams};
use serde_json::json;

use crate::manifest::{PairEntry, RunManifest};

pub const SYNTH_MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub out: PathBuf,
    pub count: usize,
    /// Case `i` uses seed `params.seed + i`.
    pub params: CaseParams,
}

fn write_case(dir: &Path, p: &CaseParams) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let case = generate(p);
    write_gray_png(&dir.join("source.png"), &case.source)?;
    write_gray_png(&dir.join("target.png"), &case.target)?;
    fs::write(dir.join("truth_affine.json"), case.true_affine.to_json() + "\n")?;
    case.true_field.write(&dir.join("truth_field.bin"))?;
    case.landmarks_src.write_csv(&dir.join("landmarks_src.csv"))?;
    case.landmarks_tgt.write_csv(&dir.join("landmarks_tgt.csv"))?;
    let params = serde_json::to_string_pretty(&json!({ "params": p, "gamma": case.gamma }))? + "\n";
    fs::write(dir.join("case.json"), params)?;
    Ok(())
}

/// Writes `case_NNN/` directories and a run manifest pointing at them.
pub fn cmd_synth(o: &SynthOptions) -> Result<RunManifest> {
    let mut pairs = Vec::with_capacity(o.count);
    for i in 0..o.count {
        let name = format!("case_{i:03}");
        let p = CaseParams {
            seed: o.params.seed + i as u64,
            ..o.params.clone()
        };
        write_case(&o.out.join(&name), &p)?;
        let rel = |f: &str| Path::new(&name).join(f);
        pairs.push(PairEntry {
            source: rel("source.png"),
            target: rel("target.png"),
            source_landmarks: Some(rel("landmarks_src.csv")),
            target_landmarks: Some(rel("landmarks_tgt.csv")),
            units: Units::Pixels,
            spacing: None,
        });
    }
    let manifest = RunManifest {
        pairs,
        output: PathBuf::from("results"),
        config: None,
    };
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(o.out.join(SYNTH_MANIFEST), text)?;
    Ok(manifest)
}
