//! Difference-of-Gaussian keypoints with upright gradient-histogram descriptors.

use serde::{Deserialize, Serialize};

use crate::imaging::{gaussian_blur, ImagePlane};

const OCTAVES: usize = 3;
const SCALES_PER_OCTAVE: usize = 3;
const BASE_SIGMA: f64 = 1.6;
const ASSUMED_BLUR: f64 = 0.5;
const CONTRAST_THRESHOLD: f64 = 0.01;
const EDGE_RATIO: f64 = 10.0;
const BORDER: usize = 5;
/// Planes below this size on either side yield no features.
pub const MIN_PLANE_SIDE: usize = 32;

pub const DESCRIPTOR_DIM: usize = 128;
const PATCH: usize = 16;
const CELLS: usize = 4;
const ORIENT_BINS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    pub score: f64,
}

/// Unit-length feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor(pub Vec<f32>);

impl Descriptor {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }
}

struct Candidate {
    kp: Keypoint,
    desc: Descriptor,
}

fn decimate(p: &ImagePlane) -> ImagePlane {
    let w = p.width().div_ceil(2);
    let h = p.height().div_ceil(2);
    ImagePlane::from_fn(w, h, |x, y| p.get(2 * x, 2 * y))
}

fn diff(a: &ImagePlane, b: &ImagePlane) -> ImagePlane {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| y - x).collect();
    ImagePlane::new(a.width(), a.height(), data).expect("same dims")
}

#[inline]
fn at(d: &ImagePlane, x: usize, y: usize) -> f64 {
    d.get(x, y)
}

fn is_extremum(dog: &[ImagePlane], s: usize, x: usize, y: usize) -> bool {
    let v = at(&dog[s], x, y);
    let mut max = true;
    let mut min = true;
    for layer in &dog[s - 1..=s + 1] {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if std::ptr::eq(layer, &dog[s]) && xx == x && yy == y {
                    continue;
                }
                let n = at(layer, xx, yy);
                max &= v > n;
                min &= v < n;
                if !max && !min {
                    return false;
                }
            }
        }
    }
    max || min
}

/// Gradient and Hessian of the DoG stack at an integer sample.
fn derivatives(dog: &[ImagePlane], s: usize, x: usize, y: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let d = |ds: isize, dx: isize, dy: isize| {
        at(
            &dog[(s as isize + ds) as usize],
            (x as isize + dx) as usize,
            (y as isize + dy) as usize,
        )
    };
    let v = d(0, 0, 0);
    let g = [
        (d(0, 1, 0) - d(0, -1, 0)) / 2.0,
        (d(0, 0, 1) - d(0, 0, -1)) / 2.0,
        (d(1, 0, 0) - d(-1, 0, 0)) / 2.0,
    ];
    let dxx = d(0, 1, 0) + d(0, -1, 0) - 2.0 * v;
    let dyy = d(0, 0, 1) + d(0, 0, -1) - 2.0 * v;
    let dss = d(1, 0, 0) + d(-1, 0, 0) - 2.0 * v;
    let dxy = (d(0, 1, 1) - d(0, -1, 1) - d(0, 1, -1) + d(0, -1, -1)) / 4.0;
    let dxs = (d(1, 1, 0) - d(1, -1, 0) - d(-1, 1, 0) + d(-1, -1, 0)) / 4.0;
    let dys = (d(1, 0, 1) - d(1, 0, -1) - d(-1, 0, 1) + d(-1, 0, -1)) / 4.0;
    (g, [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-15 {
        return None;
    }
    let col = |c: usize| {
        let mut r = m;
        for i in 0..3 {
            r[i][c] = b[i];
        }
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    };
    Some([col(0) / det, col(1) / det, col(2) / det])
}

/// Refined sub-sample location `(x, y, layer, contrast)`, or `None` when the
/// extremum is unstable, low-contrast, or edge-like.
fn refine(dog: &[ImagePlane], s0: usize, x0: usize, y0: usize) -> Option<(f64, f64, f64, f64)> {
    let (w, h) = dog[0].dims();
    let (mut s, mut x, mut y) = (s0, x0, y0);
    for _ in 0..5 {
        let (g, hess) = derivatives(dog, s, x, y);
        let off = solve3(hess, [-g[0], -g[1], -g[2]])?;
        if off.iter().all(|o| o.abs() <= 0.5) {
            let contrast = at(&dog[s], x, y) + 0.5 * (g[0] * off[0] + g[1] * off[1] + g[2] * off[2]);
            if contrast.abs() < CONTRAST_THRESHOLD {
                return None;
            }
            let (dxx, dyy, dxy) = (hess[0][0], hess[1][1], hess[0][1]);
            let tr = dxx + dyy;
            let det = dxx * dyy - dxy * dxy;
            if det <= 0.0 || tr * tr * EDGE_RATIO >= (EDGE_RATIO + 1.0).powi(2) * det {
                return None;
            }
            return Some((x as f64 + off[0], y as f64 + off[1], s as f64 + off[2], contrast));
        }
        let step = |v: usize, o: f64| (v as isize + o.round() as isize).max(0) as usize;
        x = step(x, off[0]);
        y = step(y, off[1]);
        s = step(s, off[2]);
        if s < 1 || s > SCALES_PER_OCTAVE || x < BORDER || y < BORDER || x >= w - BORDER || y >= h - BORDER {
            return None;
        }
    }
    None
}

/// Upright 4x4x8 orientation histogram over a 16x16 patch, normalized,
/// clamped at 0.2 and renormalized.
fn describe(g: &ImagePlane, cx: f64, cy: f64) -> Option<Descriptor> {
    let (w, h) = g.dims();
    let ix = cx.round() as isize;
    let iy = cy.round() as isize;
    let px = |x: isize, y: isize| g.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize);
    let mut hist = [0.0f64; DESCRIPTOR_DIM];
    let half = (PATCH / 2) as isize;
    let sigma = PATCH as f64 / 2.0;
    for dy in 0..PATCH {
        for dx in 0..PATCH {
            let x = ix + dx as isize - half;
            let y = iy + dy as isize - half;
            let gx = (px(x + 1, y) - px(x - 1, y)) / 2.0;
            let gy = (px(x, y + 1) - px(x, y - 1)) / 2.0;
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let rx = dx as f64 - 7.5;
            let ry = dy as f64 - 7.5;
            let weight = mag * (-(rx * rx + ry * ry) / (2.0 * sigma * sigma)).exp();
            let angle = gy.atan2(gx).rem_euclid(std::f64::consts::TAU);
            let ob = angle / std::f64::consts::TAU * ORIENT_BINS as f64;
            let bx = (dx as f64 + 0.5) / (PATCH / CELLS) as f64 - 0.5;
            let by = (dy as f64 + 0.5) / (PATCH / CELLS) as f64 - 0.5;
            let (x0, y0, o0) = (bx.floor(), by.floor(), ob.floor());
            let (fx, fy, fo) = (bx - x0, by - y0, ob - o0);
            for (cyi, wy) in [(y0 as isize, 1.0 - fy), (y0 as isize + 1, fy)] {
                if cyi < 0 || cyi >= CELLS as isize {
                    continue;
                }
                for (cxi, wx) in [(x0 as isize, 1.0 - fx), (x0 as isize + 1, fx)] {
                    if cxi < 0 || cxi >= CELLS as isize {
                        continue;
                    }
                    for (oi, wo) in [(o0 as usize % ORIENT_BINS, 1.0 - fo), ((o0 as usize + 1) % ORIENT_BINS, fo)] {
                        let idx = (cyi as usize * CELLS + cxi as usize) * ORIENT_BINS + oi;
                        hist[idx] += weight * wx * wy * wo;
                    }
                }
            }
        }
    }
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return None;
    }
    hist.iter_mut().for_each(|v| *v = (*v / norm).min(0.2));
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some(Descriptor(hist.iter().map(|v| (v / norm) as f32).collect()))
}

/// Multi-octave DoG keypoints (3 octaves, 3 scales per octave) with 128-long
/// upright descriptors, strongest first, at most `max_keypoints`.
pub fn detect_and_describe(p: &ImagePlane, max_keypoints: usize) -> Vec<(Keypoint, Descriptor)> {
    if p.width() < MIN_PLANE_SIDE || p.height() < MIN_PLANE_SIDE || max_keypoints == 0 {
        return Vec::new();
    }
    let k = 2f64.powf(1.0 / SCALES_PER_OCTAVE as f64);
    let init = (BASE_SIGMA * BASE_SIGMA - ASSUMED_BLUR * ASSUMED_BLUR).sqrt();
    let mut base = gaussian_blur(p, init);
    let mut found: Vec<Candidate> = Vec::new();

    for octave in 0..OCTAVES {
        let (w, h) = base.dims();
        if w < 2 * BORDER + 3 || h < 2 * BORDER + 3 {
            break;
        }
        let mut gauss = vec![base.clone()];
        for s in 1..SCALES_PER_OCTAVE + 3 {
            let prev = BASE_SIGMA * k.powi(s as i32 - 1);
            let inc = prev * (k * k - 1.0).sqrt();
            let next = gaussian_blur(&gauss[s - 1], inc);
            gauss.push(next);
        }
        let dog: Vec<ImagePlane> = gauss.windows(2).map(|g| diff(&g[0], &g[1])).collect();
        let factor = (1usize << octave) as f64;
        for s in 1..=SCALES_PER_OCTAVE {
            for y in BORDER..h - BORDER {
                for x in BORDER..w - BORDER {
                    if at(&dog[s], x, y).abs() < 0.5 * CONTRAST_THRESHOLD || !is_extremum(&dog, s, x, y) {
                        continue;
                    }
                    let Some((rx, ry, rs, contrast)) = refine(&dog, s, x, y) else {
                        continue;
                    };
                    let layer = (rs.round() as usize).clamp(1, SCALES_PER_OCTAVE);
                    let Some(desc) = describe(&gauss[layer], rx, ry) else {
                        continue;
                    };
                    found.push(Candidate {
                        kp: Keypoint {
                            x: rx * factor,
                            y: ry * factor,
                            scale: BASE_SIGMA * k.powf(rs) * factor,
                            score: contrast.abs(),
                        },
                        desc,
                    });
                }
            }
        }
        base = decimate(&gauss[SCALES_PER_OCTAVE]);
    }

    found.sort_by(|a, b| {
        b.kp.score
            .total_cmp(&a.kp.score)
            .then(a.kp.y.total_cmp(&b.kp.y))
            .then(a.kp.x.total_cmp(&b.kp.x))
    });
    found.truncate(max_keypoints);
    found.into_iter().map(|c| (c.kp, c.desc)).collect()
}
