use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matching::{Match, MatchSet};
use crate::error::{Error, Result};
use crate::geometry::AffineTransform;

pub const DEFAULT_INLIER_TOL: f64 = 5.0;
pub const DEFAULT_ITERATIONS: usize = 2000;
pub const DEFAULT_SEED: u64 = 42;

const MIN_TRIANGLE_AREA: f64 = 1e-6;
const SINGULAR_DET: f64 = 1e-12;

/// Least-squares affine taking target points onto source points
/// (the backward convention). Coordinates are centered and scaled before
/// forming the 3x3 normal equations.
pub fn fit_affine(targets: &[(f64, f64)], sources: &[(f64, f64)]) -> Result<AffineTransform> {
    let n = targets.len();
    if n < 3 || sources.len() != n {
        return Err(Error::InsufficientMatches { needed: 3, got: n.min(sources.len()) });
    }
    let nf = n as f64;
    let cx = targets.iter().map(|p| p.0).sum::<f64>() / nf;
    let cy = targets.iter().map(|p| p.1).sum::<f64>() / nf;
    let spread = targets.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).sum::<f64>() / nf;
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::DegenerateConfiguration("all target points coincide"));
    }
    let k = std::f64::consts::SQRT_2 / spread;

    let mut m = [[0.0f64; 3]; 3];
    let mut bx = [0.0f64; 3];
    let mut by = [0.0f64; 3];
    for (t, s) in targets.iter().zip(sources) {
        let r = [(t.0 - cx) * k, (t.1 - cy) * k, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
            bx[i] += r[i] * s.0;
            by[i] += r[i] * s.1;
        }
    }
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v /= nf;
        }
    }
    bx.iter_mut().chain(by.iter_mut()).for_each(|v| *v /= nf);

    let det = det3(&m);
    if det.abs() < SINGULAR_DET {
        return Err(Error::DegenerateConfiguration("singular normal equations"));
    }
    let px = cramer(&m, &bx, det);
    let py = cramer(&m, &by, det);
    let row = |p: [f64; 3]| [p[0] * k, p[1] * k, p[2] - p[0] * k * cx - p[1] * k * cy];
    Ok(AffineTransform::new([row(px), row(py)]))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn cramer(m: &[[f64; 3]; 3], b: &[f64; 3], det: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut r = *m;
        for i in 0..3 {
            r[i][c] = b[i];
        }
        *o = det3(&r) / det;
    }
    out
}

fn split(matches: &[&Match]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    matches
        .iter()
        .map(|m| ((m.target.x, m.target.y), (m.source.x, m.source.y)))
        .unzip()
}

/// Least-squares affine over every match of `ms`.
pub fn estimate_affine_least_squares(ms: &MatchSet) -> Result<AffineTransform> {
    let refs: Vec<&Match> = ms.matches.iter().collect();
    let (t, s) = split(&refs);
    fit_affine(&t, &s)
}

/// Distance between the mapped target point and its source point.
pub fn reprojection_error(a: &AffineTransform, m: &Match) -> f64 {
    let (x, y) = a.apply_xy(m.target.x, m.target.y);
    (x - m.source.x).hypot(y - m.source.y)
}

fn triangle_area(p: [(f64, f64); 3]) -> f64 {
    0.5 * ((p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1)).abs()
}

fn inliers_of(a: &AffineTransform, order: &[usize], all: &[Match], tol: f64) -> Vec<usize> {
    order
        .iter()
        .copied()
        .filter(|&i| reprojection_error(a, &all[i]) < tol)
        .collect()
}

/// RANSAC over 3-point affine hypotheses followed by a least-squares refit
/// on the best consensus set. Returns the affine and the sorted indices of
/// the inlier matches. Independent of input order for a fixed seed.
pub fn robust_affine(
    ms: &MatchSet,
    inlier_tol: f64,
    iterations: usize,
    rng_seed: u64,
) -> Result<(AffineTransform, Vec<usize>)> {
    let all = &ms.matches;
    let n = all.len();
    if n < 3 {
        return Err(Error::InsufficientMatches { needed: 3, got: n });
    }
    let key = |m: &Match| [m.source.x, m.source.y, m.target.x, m.target.y, m.confidence];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        key(&all[i])
            .iter()
            .zip(key(&all[j]).iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best: Option<(AffineTransform, Vec<usize>)> = None;
    for _ in 0..iterations {
        let pick = sample(&mut rng, n, 3);
        let trio: Vec<&Match> = pick.iter().map(|k| &all[order[k]]).collect();
        let (t, s) = split(&trio);
        if triangle_area([t[0], t[1], t[2]]) < MIN_TRIANGLE_AREA
            || triangle_area([s[0], s[1], s[2]]) < MIN_TRIANGLE_AREA
        {
            continue;
        }
        let Ok(a) = fit_affine(&t, &s) else {
            continue;
        };
        let inl = inliers_of(&a, &order, all, inlier_tol);
        if best.as_ref().map_or(true, |b| inl.len() > b.1.len()) {
            best = Some((a, inl));
        }
    }
    let (mut model, mut inliers) =
        best.ok_or(Error::DegenerateConfiguration("every sampled triple was collinear"))?;

    if inliers.len() >= 3 {
        let refs: Vec<&Match> = inliers.iter().map(|&i| &all[i]).collect();
        let (t, s) = split(&refs);
        if let Ok(refit) = fit_affine(&t, &s) {
            let refit_inl = inliers_of(&refit, &order, all, inlier_tol);
            if refit_inl.len() >= inliers.len() {
                model = refit;
                inliers = refit_inl;
            }
        }
    }
    inliers.sort_unstable();
    Ok((model, inliers))
}

/// Mean reprojection error over the given match indices (0 when empty).
pub fn mean_error(a: &AffineTransform, ms: &MatchSet, indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    indices.iter().map(|&i| reprojection_error(a, &ms.matches[i])).sum::<f64>() / indices.len() as f64
}
