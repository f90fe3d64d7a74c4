use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::PairResult;
use crate::error::{Error, Result};

pub const AFFINE_FILE: &str = "affine.json";
pub const FIELD_FILE: &str = "field.bin";
pub const REPORT_FILE: &str = "report.json";

/// Rounds every float to 9 significant digits so reports are stable to read
/// and diff. Non-finite numbers are already `null` in JSON.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().expect("f64");
            let r: f64 = format!("{f:.8e}").parse().expect("formatted float parses");
            json!(r)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&round_json(v.clone())).expect("JSON value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::write_failure(path, e))
}

pub fn pair_report(r: &PairResult) -> Value {
    json!({
        "frames": r.frames,
        "initial_alignment": r.initial,
        "nonrigid": {
            "field_dims": [r.field.width(), r.field.height()],
            "folding_ratio": r.folding_ratio,
            "mean_displacement": r.field.mean_magnitude(),
            "max_displacement": r.field.max_magnitude(),
            "per_level_objective_trace": r.per_level_objective_trace,
        },
        "affine": r.affine,
        "warnings": r.warnings,
    })
}

/// Writes `affine.json` (full precision), `field.bin` and `report.json`.
pub fn write_pair_artifacts(dir: &Path, r: &PairResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::write_failure(dir, e))?;
    let affine = dir.join(AFFINE_FILE);
    fs::write(&affine, r.affine.to_json() + "\n").map_err(|e| Error::write_failure(&affine, e))?;
    r.field.write(&dir.join(FIELD_FILE))?;
    write_json(&dir.join(REPORT_FILE), &pair_report(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_nine_digits() {
        let v = round_json(json!({"a": 0.1234567891234, "b": [1.0, 123456789012.0, 3], "c": "x"}));
        assert_eq!(v["a"].as_f64().unwrap(), 0.123456789);
        assert_eq!(v["b"][1].as_f64().unwrap(), 123456789000.0);
        assert_eq!(v["b"][2], json!(3));
        assert_eq!(v["c"], json!("x"));
    }
}
