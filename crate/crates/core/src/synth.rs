//! Seed-deterministic synthetic registration cases with known ground truth.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluation::LandmarkSet;
use crate::geometry::{compose, rotation_about_center, AffineTransform, Point2};
use crate::imaging::{bicubic_sample, gaussian_blur, normalize_unit, ImagePlane};
use crate::nonrigid::DisplacementField;

pub const LANDMARK_GRID: usize = 10;
const TEXTURE_BLOBS: usize = 300;
const NOISE_SIGMA: f64 = 1.5;
const NOISE_WEIGHT: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaseParams {
    pub seed: u64,
    pub size: usize,
    pub rot_deg: f64,
    pub max_deform_px: f64,
    pub n_blobs: usize,
    /// Fixed deformation bump width; drawn from [size/16, size/8] when absent.
    pub blob_sigma: Option<f64>,
    /// Target gamma is drawn from [1 - j, 1 + j].
    pub gamma_jitter: f64,
    /// Translation magnitude is drawn from [max/2, max] of the image size.
    pub max_translation_frac: f64,
}

impl Default for CaseParams {
    fn default() -> Self {
        Self {
            seed: 0,
            size: 512,
            rot_deg: 0.0,
            max_deform_px: 10.0,
            n_blobs: 3,
            blob_sigma: None,
            gamma_jitter: 0.1,
            max_translation_frac: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Bump {
    cx: f64,
    cy: f64,
    sigma: f64,
    ax: f64,
    ay: f64,
}

/// Smooth analytic displacement: a scaled sum of Gaussian bumps.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpField {
    bumps: Vec<Bump>,
}

impl BumpField {
    pub fn at(&self, x: f64, y: f64) -> (f64, f64) {
        self.bumps.iter().fold((0.0, 0.0), |(ux, uy), b| {
            let g = (-((x - b.cx).powi(2) + (y - b.cy).powi(2)) / (2.0 * b.sigma * b.sigma)).exp();
            (ux + b.ax * g, uy + b.ay * g)
        })
    }

    pub fn sample(&self, w: usize, h: usize) -> DisplacementField {
        DisplacementField::from_fn(w, h, |x, y| self.at(x as f64, y as f64))
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCase {
    pub params: CaseParams,
    pub source: ImagePlane,
    pub target: ImagePlane,
    pub true_affine: AffineTransform,
    pub true_field: DisplacementField,
    pub deformation: BumpField,
    pub gamma: f64,
    /// Grid in the target frame.
    pub landmarks_tgt: LandmarkSet,
    /// The same grid mapped through the truths into the source frame.
    pub landmarks_src: LandmarkSet,
}

impl SyntheticCase {
    /// Ground-truth backward mapping from target to source pixels.
    pub fn true_map(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = self.deformation.at(x, y);
        self.true_affine.apply_xy(x + dx, y + dy)
    }
}

pub fn generate_case(seed: u64, size: usize, rot_deg: f64, max_deform_px: f64, n_blobs: usize) -> SyntheticCase {
    generate(&CaseParams {
        seed,
        size,
        rot_deg,
        max_deform_px,
        n_blobs,
        ..CaseParams::default()
    })
}

/// Band-limited texture: oriented anisotropic Gaussians plus blurred noise,
/// normalized to [0, 1].
pub fn texture(rng: &mut ChaCha8Rng, size: usize) -> ImagePlane {
    struct Blob {
        cx: f64,
        cy: f64,
        cos: f64,
        sin: f64,
        inv_a: f64,
        inv_b: f64,
        amp: f64,
        reach: f64,
    }
    let s = size as f64;
    let blobs: Vec<Blob> = (0..TEXTURE_BLOBS)
        .map(|_| {
            let major = rng.gen_range(s / 96.0..s / 24.0);
            let minor = major * rng.gen_range(0.3..1.0);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let amp = rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Blob {
                cx: rng.gen_range(0.0..s),
                cy: rng.gen_range(0.0..s),
                cos: theta.cos(),
                sin: theta.sin(),
                inv_a: 1.0 / (2.0 * major * major),
                inv_b: 1.0 / (2.0 * minor * minor),
                amp,
                reach: 3.0 * major,
            }
        })
        .collect();
    let noise: Vec<f64> = (0..size * size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let noise = gaussian_blur(&ImagePlane::new(size, size, noise).expect("square"), NOISE_SIGMA);
    let sd = (noise.data().iter().map(|v| v * v).sum::<f64>() / noise.data().len() as f64).sqrt();
    let noise_scale = if sd > 0.0 { NOISE_WEIGHT / sd } else { 0.0 };

    let mut data = vec![0.0; size * size];
    data.par_chunks_mut(size).enumerate().for_each(|(y, row)| {
        let yf = y as f64;
        for b in blobs.iter().filter(|b| (yf - b.cy).abs() <= b.reach) {
            let x0 = (b.cx - b.reach).floor().max(0.0) as usize;
            let x1 = ((b.cx + b.reach).ceil() as usize).min(size - 1);
            for (x, v) in row.iter_mut().enumerate().take(x1 + 1).skip(x0) {
                let dx = x as f64 - b.cx;
                let dy = yf - b.cy;
                let u = dx * b.cos + dy * b.sin;
                let w = -dx * b.sin + dy * b.cos;
                *v += b.amp * (-(u * u * b.inv_a + w * w * b.inv_b)).exp();
            }
        }
        for (v, n) in row.iter_mut().zip(noise.row(y)) {
            *v += n * noise_scale;
        }
    });
    normalize_unit(&ImagePlane::new(size, size, data).expect("square"))
}

fn bumps(rng: &mut ChaCha8Rng, p: &CaseParams) -> BumpField {
    let s = p.size as f64;
    let mut bumps: Vec<Bump> = (0..p.n_blobs)
        .map(|_| {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(0.5..1.0);
            Bump {
                cx: rng.gen_range(0.2 * s..0.8 * s),
                cy: rng.gen_range(0.2 * s..0.8 * s),
                sigma: p.blob_sigma.unwrap_or_else(|| rng.gen_range(s / 16.0..s / 8.0)),
                ax: amp * angle.cos(),
                ay: amp * angle.sin(),
            }
        })
        .collect();
    let raw = BumpField { bumps: bumps.clone() };
    let peak = (0..p.size)
        .into_par_iter()
        .map(|y| {
            (0..p.size)
                .map(|x| {
                    let (a, b) = raw.at(x as f64, y as f64);
                    a.hypot(b)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let k = if peak > 0.0 && p.max_deform_px > 0.0 { p.max_deform_px / peak } else { 0.0 };
    for b in &mut bumps {
        b.ax *= k;
        b.ay *= k;
    }
    if k == 0.0 {
        bumps.clear();
    }
    BumpField { bumps }
}

/// 10x10 integer grid strictly inside a `size x size` frame.
pub fn landmark_grid(size: usize) -> Vec<Point2> {
    let step = size as f64 / (LANDMARK_GRID + 1) as f64;
    (1..=LANDMARK_GRID)
        .flat_map(|j| {
            (1..=LANDMARK_GRID).map(move |i| Point2::new((i as f64 * step).round(), (j as f64 * step).round()))
        })
        .collect()
}

pub fn generate(p: &CaseParams) -> SyntheticCase {
    assert!(p.size >= 16, "synthetic cases need at least 16 px");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let source = texture(&mut rng, p.size);
    let deformation = bumps(&mut rng, p);

    let s = p.size as f64;
    let (tx, ty) = if p.max_translation_frac > 0.0 {
        let mag = rng.gen_range(0.5 * p.max_translation_frac..=p.max_translation_frac) * s;
        let dir = rng.gen_range(0.0..std::f64::consts::TAU);
        (mag * dir.cos(), mag * dir.sin())
    } else {
        (0.0, 0.0)
    };
    let true_affine = compose(
        &rotation_about_center(p.rot_deg, p.size, p.size),
        &AffineTransform::translation(tx, ty),
    );
    let gamma = if p.gamma_jitter > 0.0 {
        1.0 + rng.gen_range(-p.gamma_jitter..=p.gamma_jitter)
    } else {
        1.0
    };

    let true_field = deformation.sample(p.size, p.size);
    let mut target = vec![0.0; p.size * p.size];
    target.par_chunks_mut(p.size).enumerate().for_each(|(y, row)| {
        for (x, v) in row.iter_mut().enumerate() {
            let (dx, dy) = true_field.get(x, y);
            let (sx, sy) = true_affine.apply_xy(x as f64 + dx, y as f64 + dy);
            let sample = bicubic_sample(&source, sx, sy).clamp(0.0, 1.0);
            *v = if gamma == 1.0 { sample } else { sample.powf(gamma) };
        }
    });
    let target = ImagePlane::new(p.size, p.size, target).expect("square");

    let grid = landmark_grid(p.size);
    let landmarks_tgt = LandmarkSet::from_points(grid.clone());
    let mut case = SyntheticCase {
        params: p.clone(),
        source,
        target,
        true_affine,
        true_field,
        deformation,
        gamma,
        landmarks_src: landmarks_tgt.clone(),
        landmarks_tgt,
    };
    let src_pts = grid
        .iter()
        .map(|q| {
            let (x, y) = case.true_map(q.x, q.y);
            Point2::new(x, y)
        })
        .collect();
    case.landmarks_src = case.landmarks_tgt.with_points(src_pts);
    case
}
