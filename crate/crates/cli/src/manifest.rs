use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gigareg::evaluation::Units;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub source: PathBuf,
    pub target: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_landmarks: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_landmarks: Option<PathBuf>,
    #[serde(default = "default_units")]
    pub units: Units,
    /// Micrometers per level-0 pixel; falls back to the source pyramid's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

fn default_units() -> Units {
    Units::Pixels
}

/// Batch description. Relative paths are resolved against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub pairs: Vec<PairEntry>,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: RunManifest =
            serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut m.output);
        if let Some(c) = m.config.as_mut() {
            fix(c);
        }
        for p in &mut m.pairs {
            fix(&mut p.source);
            fix(&mut p.target);
            if let Some(l) = p.source_landmarks.as_mut() {
                fix(l);
            }
            if let Some(l) = p.target_landmarks.as_mut() {
                fix(l);
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, p) in self.pairs.iter().enumerate() {
            if !seen.insert((&p.source, &p.target)) {
                bail!("pair {i} repeats an earlier (source, target) pair");
            }
        }
        Ok(())
    }

    pub fn pair_dir(&self, index: usize) -> PathBuf {
        pair_dir(&self.output, index)
    }
}

pub fn pair_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("pair_{index:03}"))
}
