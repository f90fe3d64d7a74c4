use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use gigareg::imaging::PyramidImage;
use gigareg::initial::Backend;
use gigareg::pipeline::{register_pair, write_json, write_pair_artifacts, PairResult};
use gigareg::PipelineConfig;
use log::{error, info};
use serde_json::{json, Value};

use crate::manifest::{PairEntry, RunManifest};
use crate::RunStatus;

pub const RUN_REPORT_FILE: &str = "run_report.json";

#[derive(Clone, Debug, Default)]
pub struct RegisterOptions {
    /// Overrides the manifest's config path.
    pub config: Option<PathBuf>,
    pub jobs: usize,
    /// External matcher command; replaces the configured backend.
    pub adapter: Option<String>,
    /// RANSAC seed of the initial alignment.
    pub seed: Option<u64>,
}

/// Config from `path`, or the defaults when absent.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            PipelineConfig::from_json(&text).with_context(|| format!("config {}", p.display()))
        }
    }
}

fn register_one(entry: &PairEntry, cfg: &PipelineConfig, dir: &Path) -> Result<PairResult> {
    let src = PyramidImage::open(&entry.source)?;
    let tgt = PyramidImage::open(&entry.target)?;
    let r = register_pair(&src, &tgt, cfg)?;
    write_pair_artifacts(dir, &r)?;
    Ok(r)
}

fn pair_summary(index: usize, entry: &PairEntry, dir: &str, outcome: &Result<PairResult>) -> Value {
    let mut v = json!({
        "index": index,
        "source": entry.source,
        "target": entry.target,
        "output": dir,
    });
    match outcome {
        Ok(r) => {
            v["status"] = json!("ok");
            v["winner"] = json!(r.initial.winner);
            v["fallback_identity"] = json!(r.initial.fallback_identity);
            v["rotation_deg"] = json!(r.affine.rotation_deg());
            v["folding_ratio"] = json!(r.folding_ratio);
            v["warnings"] = json!(r.warnings);
        }
        Err(e) => {
            v["status"] = json!("error");
            v["error"] = json!(format!("{e:#}"));
        }
    }
    v
}

/// Registers every pair of the manifest. Per-pair failures are recorded in
/// the run report and do not stop the batch.
pub fn cmd_register(manifest_path: &Path, opts: &RegisterOptions) -> Result<RunStatus> {
    let manifest = RunManifest::load(manifest_path)?;
    let mut cfg = load_config(opts.config.as_deref().or(manifest.config.as_deref()))?;
    if let Some(cmd) = &opts.adapter {
        cfg.initial.backend = Backend::Adapter(cmd.clone());
    }
    if let Some(seed) = opts.seed {
        cfg.initial.seed = seed;
    }
    cfg.validate()?;
    fs::create_dir_all(&manifest.output).with_context(|| format!("creating {}", manifest.output.display()))?;

    let n = manifest.pairs.len();
    let slots: Vec<Mutex<Option<Value>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = opts.jobs.clamp(1, n.max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let entry = &manifest.pairs[i];
                let dir = manifest.pair_dir(i);
                let outcome = register_one(entry, &cfg, &dir);
                match &outcome {
                    Ok(r) => info!(
                        "pair {i}: done (rotation {:.2} deg, folding {:.2e})",
                        r.affine.rotation_deg(),
                        r.folding_ratio
                    ),
                    Err(e) => error!("pair {i}: {e:#}"),
                }
                let name = dir.file_name().expect("pair dir").to_string_lossy().into_owned();
                *slots[i].lock().expect("slot") = Some(pair_summary(i, entry, &name, &outcome));
            });
        }
    });

    let pairs: Vec<Value> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot").expect("every pair visited"))
        .collect();
    let failures = pairs.iter().filter(|p| p["status"] != "ok").count();
    let report = json!({ "pairs": pairs, "failures": failures });
    write_json(&manifest.output.join(RUN_REPORT_FILE), &report)?;
    Ok(RunStatus { pairs: n, failures })
}
