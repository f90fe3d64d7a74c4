use super::detect::{Descriptor, Keypoint};

pub const DEFAULT_RATIO: f64 = 0.8;

/// One correspondence: source keypoint, target keypoint, confidence in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Match {
    pub source: Keypoint,
    pub target: Keypoint,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchSet {
    pub matches: Vec<Match>,
    pub descriptor_dim: usize,
    pub backend_id: String,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

fn dist2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Nearest index, its distance, and the ratio nearest / second-nearest
/// (0 when there is no second neighbour).
fn nearest(q: &Descriptor, pool: &[Descriptor]) -> Option<(usize, f64)> {
    let mut best = (usize::MAX, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (i, d) in pool.iter().enumerate() {
        let v = dist2(&q.0, &d.0);
        if v < best.1 {
            second = best.1;
            best = (i, v);
        } else if v < second {
            second = v;
        }
    }
    if best.0 == usize::MAX {
        return None;
    }
    let ratio = if second.is_finite() {
        if second > 0.0 {
            (best.1 / second).sqrt()
        } else {
            1.0
        }
    } else {
        0.0
    };
    Some((best.0, ratio))
}

/// Mutual nearest neighbours that pass the ratio test in both directions.
/// Returns `(index_a, index_b, confidence)` sorted by `index_a`.
pub fn match_descriptors(a: &[Descriptor], b: &[Descriptor], ratio: f64) -> Vec<(usize, usize, f64)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let back: Vec<Option<(usize, f64)>> = b.iter().map(|d| nearest(d, a)).collect();
    let mut out = Vec::new();
    for (i, d) in a.iter().enumerate() {
        let Some((j, r_ab)) = nearest(d, b) else {
            continue;
        };
        let Some((i_back, r_ba)) = back[j] else {
            continue;
        };
        if i_back != i || r_ab >= ratio || r_ba >= ratio {
            continue;
        }
        out.push((i, j, (1.0 - r_ab.max(r_ba)).clamp(0.0, 1.0)));
    }
    out
}
