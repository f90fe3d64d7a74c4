//! Landmark metrics: TRE, rTRE, dataset aggregates and robustness.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::nonrigid::ComposedTransform;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Pixels,
    Micrometers,
    Millimeters,
}

impl Units {
    fn micrometers(self) -> Option<f64> {
        match self {
            Units::Pixels => None,
            Units::Micrometers => Some(1.0),
            Units::Millimeters => Some(1000.0),
        }
    }
}

/// Named points in pixel coordinates; `spacing` is micrometers per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    pub ids: Vec<String>,
    pub points: Vec<Point2>,
    pub spacing: Option<f64>,
}

impl LandmarkSet {
    pub fn from_points(points: Vec<Point2>) -> Self {
        Self {
            ids: (0..points.len()).map(|i| i.to_string()).collect(),
            points,
            spacing: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_points(&self, points: Vec<Point2>) -> Self {
        Self {
            ids: self.ids.clone(),
            points,
            spacing: self.spacing,
        }
    }

    /// Writes `id,x,y` in pixels.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::write_failure(path, e))?;
        let mut put = |rec: [String; 3]| w.write_record(&rec).map_err(|e| Error::write_failure(path, e));
        put(["id".into(), "x".into(), "y".into()])?;
        for (id, p) in self.ids.iter().zip(&self.points) {
            put([id.clone(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush().map_err(|e| Error::write_failure(path, e))
    }
}

/// Reads an `id,x,y` CSV and converts coordinates to pixels.
pub fn load_landmarks(path: &Path, units: Units, spacing: Option<f64>) -> Result<LandmarkSet> {
    let malformed = |reason: String| Error::MalformedCsv {
        path: path.to_path_buf(),
        reason,
    };
    let factor = match units.micrometers() {
        None => 1.0,
        Some(um) => match spacing {
            Some(s) if s > 0.0 && s.is_finite() => um / s,
            Some(s) => return Err(Error::InvalidArgument(format!("spacing must be positive, got {s}"))),
            None => return Err(Error::MissingSpacing),
        },
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::unreadable(path, e))?;
    let header = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "x", "y"] {
        return Err(malformed(format!("expected header id,x,y, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut set = LandmarkSet {
        ids: Vec::new(),
        points: Vec::new(),
        spacing,
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("row {}: bad number {:?}", line + 2, &rec[i])))
        };
        set.ids.push(rec[0].to_string());
        set.points.push(Point2::new(num(1)? * factor, num(2)? * factor));
    }
    if set.is_empty() {
        return Err(malformed("no landmarks".into()));
    }
    Ok(set)
}

/// Maps target-frame landmarks through a backward transform into the source
/// frame, where they are compared with the source landmarks.
pub fn map_landmarks(t: &ComposedTransform, target: &LandmarkSet) -> LandmarkSet {
    target.with_points(target.points.iter().map(|&p| t.map_point(p)).collect())
}

/// Per-landmark Euclidean distance scaled by `spacing`.
pub fn tre(warped: &LandmarkSet, target: &LandmarkSet, spacing: f64) -> Result<Vec<f64>> {
    if warped.len() != target.len() {
        return Err(Error::LandmarkMismatch(format!("{} vs {} landmarks", warped.len(), target.len())));
    }
    if let Some(i) = (0..warped.len()).find(|&i| warped.ids[i] != target.ids[i]) {
        return Err(Error::LandmarkMismatch(format!(
            "id {:?} does not match {:?}",
            warped.ids[i], target.ids[i]
        )));
    }
    Ok(warped
        .points
        .iter()
        .zip(&target.points)
        .map(|(a, b)| a.distance(*b) * spacing)
        .collect())
}

pub fn rtre(distances_px: &[f64], w: usize, h: usize) -> Vec<f64> {
    let diag = (w as f64).hypot(h as f64);
    distances_px.iter().map(|d| d / diag).collect()
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairEvaluation {
    pub tre_per_landmark: Vec<f64>,
    pub median_tre: f64,
    pub average_tre: f64,
    pub rtre_per_landmark: Vec<f64>,
    pub median_rtre: f64,
    pub average_rtre: f64,
}

impl PairEvaluation {
    /// `tre` in physical units and `tre_px` in pixels of an image of `dims`.
    pub fn new(tre: Vec<f64>, tre_px: &[f64], dims: (usize, usize)) -> Self {
        let r = rtre(tre_px, dims.0, dims.1);
        Self {
            median_tre: median(&tre),
            average_tre: mean(&tre),
            tre_per_landmark: tre,
            median_rtre: median(&r),
            average_rtre: mean(&r),
            rtre_per_landmark: r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aggregates {
    pub med_med: f64,
    pub med_avg: f64,
    pub avg_med: f64,
    pub avg_avg: f64,
}

impl Aggregates {
    /// From per-pair medians and averages.
    pub fn from_pairs(medians: &[f64], averages: &[f64]) -> Self {
        Self {
            med_med: median(medians),
            med_avg: median(averages),
            avg_med: mean(medians),
            avg_avg: mean(averages),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub pairs: usize,
    pub tre: Aggregates,
    pub rtre: Aggregates,
}

pub fn aggregate(per_pair: &[PairEvaluation]) -> Result<DatasetSummary> {
    if per_pair.is_empty() {
        return Err(Error::EmptyInput("no pairs to aggregate"));
    }
    let col = |f: fn(&PairEvaluation) -> f64| per_pair.iter().map(f).collect::<Vec<_>>();
    Ok(DatasetSummary {
        pairs: per_pair.len(),
        tre: Aggregates::from_pairs(&col(|p| p.median_tre), &col(|p| p.average_tre)),
        rtre: Aggregates::from_pairs(&col(|p| p.median_rtre), &col(|p| p.average_rtre)),
    })
}

/// Fraction of pairs whose median TRE decreased.
pub fn robustness(initial_tre: &[Vec<f64>], final_tre: &[Vec<f64>]) -> Result<f64> {
    if initial_tre.len() != final_tre.len() {
        return Err(Error::LandmarkMismatch(format!(
            "{} initial vs {} final pairs",
            initial_tre.len(),
            final_tre.len()
        )));
    }
    if initial_tre.is_empty() {
        return Err(Error::EmptyInput("no pairs"));
    }
    let improved = initial_tre
        .iter()
        .zip(final_tre)
        .filter(|(a, b)| median(b) < median(a))
        .count();
    Ok(improved as f64 / initial_tre.len() as f64)
}
