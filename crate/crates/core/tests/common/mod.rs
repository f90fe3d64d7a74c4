//! Brute-force reference implementations and finite-difference checks,
//! written independently of the library's optimized code paths.
#![allow(dead_code)]

use gigareg::evaluation::PairEvaluation;
use gigareg::features::{Keypoint, Match, MatchSet};
use gigareg::nonrigid::{diffusive_reg, local_ncc, objective};
use gigareg::{DisplacementField, ImagePlane};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-5;

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane {
    let data = (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect();
    ImagePlane::new(w, h, data).unwrap()
}

/// Smooth random plane, so bicubic warps have informative gradients.
pub fn smooth_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane {
    let (a, b, c, d): (f64, f64, f64, f64) = (
        rng.gen_range(0.2..0.9),
        rng.gen_range(0.2..0.9),
        rng.gen_range(0.0..6.3),
        rng.gen_range(0.0..6.3),
    );
    ImagePlane::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64, y as f64);
        0.5 + 0.25 * (a * x + c).sin() * (b * y + d).cos() + 0.15 * (0.37 * x - 0.23 * y).sin()
    })
}

pub fn random_field(rng: &mut ChaCha8Rng, w: usize, h: usize, amp: f64) -> DisplacementField {
    let ux = (0..w * h).map(|_| rng.gen_range(-amp..amp)).collect();
    let uy = (0..w * h).map(|_| rng.gen_range(-amp..amp)).collect();
    DisplacementField::new(w, h, ux, uy).unwrap()
}

/// `1 - mean(ncc)` with every window gathered explicitly.
pub fn ncc_oracle(a: &ImagePlane, b: &ImagePlane, window: usize) -> f64 {
    let (w, h) = a.dims();
    let r = (window / 2) as i64;
    let mut total = 0.0;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut pa = Vec::new();
            let mut pb = Vec::new();
            for yy in (y - r).max(0)..=(y + r).min(h as i64 - 1) {
                for xx in (x - r).max(0)..=(x + r).min(w as i64 - 1) {
                    pa.push(a.get(xx as usize, yy as usize));
                    pb.push(b.get(xx as usize, yy as usize));
                }
            }
            let n = pa.len() as f64;
            let ma = pa.iter().sum::<f64>() / n;
            let mb = pb.iter().sum::<f64>() / n;
            let mut va = 0.0;
            let mut vb = 0.0;
            let mut cov = 0.0;
            for (p, q) in pa.iter().zip(&pb) {
                va += (p - ma) * (p - ma);
                vb += (q - mb) * (q - mb);
                cov += (p - ma) * (q - mb);
            }
            total += (cov / n) / ((va / n + EPS) * (vb / n + EPS)).sqrt();
        }
    }
    1.0 - total / (w * h) as f64
}

/// Sum of squared forward differences; nothing past the last row/column.
pub fn reg_oracle(u: &DisplacementField) -> f64 {
    let (w, h) = u.dims();
    let mut s = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (ux, uy) = u.get(x, y);
            if x + 1 < w {
                let (nx, ny) = u.get(x + 1, y);
                s += (nx - ux).powi(2) + (ny - uy).powi(2);
            }
            if y + 1 < h {
                let (nx, ny) = u.get(x, y + 1);
                s += (nx - ux).powi(2) + (ny - uy).powi(2);
            }
        }
    }
    s / (2.0 * (w * h) as f64)
}

/// Fraction of non-positive Jacobians; the last row/column use the backward
/// difference (the library's documented stencil).
pub fn folding_oracle(u: &DisplacementField) -> f64 {
    let (w, h) = u.dims();
    let diff = |x: usize, y: usize, along_x: bool| -> (f64, f64) {
        let (x0, y0, x1, y1) = if along_x {
            if x + 1 < w { (x, y, x + 1, y) } else if x > 0 { (x - 1, y, x, y) } else { return (0.0, 0.0) }
        } else if y + 1 < h {
            (x, y, x, y + 1)
        } else if y > 0 {
            (x, y - 1, x, y)
        } else {
            return (0.0, 0.0);
        };
        let (a, b) = u.get(x0, y0);
        let (c, d) = u.get(x1, y1);
        (c - a, d - b)
    };
    let mut folded = 0;
    for y in 0..h {
        for x in 0..w {
            let (dux_dx, duy_dx) = diff(x, y, true);
            let (dux_dy, duy_dy) = diff(x, y, false);
            let j = [[1.0 + dux_dx, dux_dy], [duy_dx, 1.0 + duy_dy]];
            if j[0][0] * j[1][1] - j[0][1] * j[1][0] <= 0.0 {
                folded += 1;
            }
        }
    }
    folded as f64 / (w * h) as f64
}

/// Solves a 6x6 system by Gaussian elimination with partial pivoting.
fn solve6(mut a: [[f64; 7]; 6]) -> Option<[f64; 6]> {
    for col in 0..6 {
        let piv = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..6 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..7 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = [0.0; 6];
    for i in 0..6 {
        x[i] = a[i][6] / a[i][i];
    }
    Some(x)
}

/// Least-squares affine (target -> source) from the full 6x6 normal equations.
pub fn ls_oracle(targets: &[(f64, f64)], sources: &[(f64, f64)]) -> Option<[[f64; 3]; 2]> {
    let mut m = [[0.0; 7]; 6];
    for (t, s) in targets.iter().zip(sources) {
        // Rows of the design matrix for the x and y equations.
        let rows = [([t.0, t.1, 1.0, 0.0, 0.0, 0.0], s.0), ([0.0, 0.0, 0.0, t.0, t.1, 1.0], s.1)];
        for (r, rhs) in rows {
            for i in 0..6 {
                for j in 0..6 {
                    m[i][j] += r[i] * r[j];
                }
                m[i][6] += r[i] * rhs;
            }
        }
    }
    let p = solve6(m)?;
    Some([[p[0], p[1], p[2]], [p[3], p[4], p[5]]])
}

pub fn match_set(targets: &[(f64, f64)], sources: &[(f64, f64)]) -> MatchSet {
    let kp = |p: &(f64, f64)| Keypoint { x: p.0, y: p.1, scale: 1.0, score: 1.0 };
    MatchSet {
        matches: targets
            .iter()
            .zip(sources)
            .map(|(t, s)| Match { source: kp(s), target: kp(t), confidence: 1.0 })
            .collect(),
        descriptor_dim: 128,
        backend_id: "oracle".into(),
    }
}

fn sorted_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}

fn plain_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// (med-med, med-avg, avg-med, avg-avg) of per-landmark TREs.
pub fn aggregate_oracle(pairs: &[Vec<f64>]) -> [f64; 4] {
    let meds: Vec<f64> = pairs.iter().map(|p| sorted_median(p)).collect();
    let avgs: Vec<f64> = pairs.iter().map(|p| plain_mean(p)).collect();
    [sorted_median(&meds), sorted_median(&avgs), plain_mean(&meds), plain_mean(&avgs)]
}

pub fn pair_evaluations(pairs: &[Vec<f64>]) -> Vec<PairEvaluation> {
    pairs.iter().map(|p| PairEvaluation::new(p.clone(), p, (100, 100))).collect()
}

/// `||analytic - numeric|| / max(||analytic||, ||numeric||)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let na = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 { diff } else { diff / scale }
}

const FD_STEP: f64 = 1e-4;

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

pub fn ncc_gradient_error(a: &ImagePlane, b: &ImagePlane, window: usize) -> f64 {
    let analytic = local_ncc(a, b, window).unwrap().grad;
    let (w, h) = a.dims();
    let numeric: Vec<f64> = (0..w * h)
        .map(|i| {
            central(
                |v| {
                    let mut d = a.data().to_vec();
                    d[i] = v;
                    local_ncc(&ImagePlane::new(w, h, d).unwrap(), b, window).unwrap().cost
                },
                a.data()[i],
            )
        })
        .collect();
    relative_error(&analytic, &numeric)
}

/// Moves sample positions off the domain edges, where the zero border makes
/// the warp discontinuous and finite differences meaningless.
pub fn away_from_edges(u: &DisplacementField) -> DisplacementField {
    const GAP: f64 = 1e-2;
    let (w, h) = u.dims();
    let nudge = |p: f64, v: f64, hi: f64| {
        let pos = p + v;
        if (pos - 0.0).abs() < GAP || (pos - hi).abs() < GAP {
            v + 2.0 * GAP
        } else {
            v
        }
    };
    DisplacementField::from_fn(w, h, |x, y| {
        let (ux, uy) = u.get(x, y);
        (nudge(x as f64, ux, (w - 1) as f64), nudge(y as f64, uy, (h - 1) as f64))
    })
}

fn perturbed(u: &DisplacementField, k: usize, v: f64) -> DisplacementField {
    let (w, h) = u.dims();
    let n = w * h;
    let mut ux = u.ux().to_vec();
    let mut uy = u.uy().to_vec();
    if k < n {
        ux[k] = v;
    } else {
        uy[k - n] = v;
    }
    DisplacementField::new(w, h, ux, uy).unwrap()
}

fn field_value(u: &DisplacementField, k: usize) -> f64 {
    let n = u.width() * u.height();
    if k < n { u.ux()[k] } else { u.uy()[k - n] }
}

pub fn reg_gradient_error(u: &DisplacementField) -> f64 {
    let r = diffusive_reg(u);
    let analytic: Vec<f64> = r.grad_x.iter().chain(&r.grad_y).copied().collect();
    let numeric: Vec<f64> = (0..analytic.len())
        .map(|k| central(|v| diffusive_reg(&perturbed(u, k, v)).value, field_value(u, k)))
        .collect();
    relative_error(&analytic, &numeric)
}

pub fn objective_gradient_error(
    src: &ImagePlane,
    tgt: &ImagePlane,
    u: &DisplacementField,
    theta: f64,
    window: usize,
) -> f64 {
    let o = objective(src, tgt, u, theta, window).unwrap();
    let analytic: Vec<f64> = o.grad_x.iter().chain(&o.grad_y).copied().collect();
    let numeric: Vec<f64> = (0..analytic.len())
        .map(|k| {
            central(
                |v| objective(src, tgt, &perturbed(u, k, v), theta, window).unwrap().value,
                field_value(u, k),
            )
        })
        .collect();
    relative_error(&analytic, &numeric)
}
