//! Contrast-limited adaptive histogram equalization.

use super::plane::ImagePlane;

pub const CLAHE_BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClaheParams {
    /// Histogram clip height relative to a flat histogram. `f64::INFINITY` disables clipping.
    pub clip_limit: f64,
    pub tiles_x: usize,
    pub tiles_y: usize,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            clip_limit: 2.0,
            tiles_x: 8,
            tiles_y: 8,
        }
    }
}

#[inline]
fn bin_of(v: f64) -> usize {
    ((v.clamp(0.0, 1.0) * CLAHE_BINS as f64) as usize).min(CLAHE_BINS - 1)
}

enum TileMap {
    /// Tile holds a single intensity bin; leave values untouched.
    Identity,
    Lut(Box<[f64; CLAHE_BINS]>),
}

impl TileMap {
    #[inline]
    fn apply(&self, v: f64, bin: usize) -> f64 {
        match self {
            TileMap::Identity => v,
            TileMap::Lut(lut) => lut[bin],
        }
    }
}

fn tile_bounds(n: usize, tiles: usize) -> Vec<(usize, usize)> {
    (0..tiles)
        .map(|i| (i * n / tiles, (i + 1) * n / tiles))
        .collect()
}

fn tile_map(p: &ImagePlane, (x0, x1): (usize, usize), (y0, y1): (usize, usize), clip: f64) -> TileMap {
    let mut hist = [0.0f64; CLAHE_BINS];
    for y in y0..y1 {
        for &v in &p.row(y)[x0..x1] {
            hist[bin_of(v)] += 1.0;
        }
    }
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    if n == 0.0 || hist.iter().filter(|&&c| c > 0.0).count() <= 1 {
        return TileMap::Identity;
    }
    if clip.is_finite() {
        let limit = clip * n / CLAHE_BINS as f64;
        let mut excess = 0.0;
        for c in hist.iter_mut() {
            if *c > limit {
                excess += *c - limit;
                *c = limit;
            }
        }
        let share = excess / CLAHE_BINS as f64;
        hist.iter_mut().for_each(|c| *c += share);
    }
    let mut lut = Box::new([0.0; CLAHE_BINS]);
    let mut cdf = 0.0;
    for (l, c) in lut.iter_mut().zip(hist.iter()) {
        cdf += c;
        *l = (cdf / n).clamp(0.0, 1.0);
    }
    TileMap::Lut(lut)
}

/// Interpolation partners along one axis: `(lo_tile, hi_tile, weight_of_hi)`.
fn axis_weights(n: usize, bounds: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
    let centers: Vec<f64> = bounds
        .iter()
        .map(|&(a, b)| (a as f64 + b as f64 - 1.0) / 2.0)
        .collect();
    let last = centers.len() - 1;
    (0..n)
        .map(|i| {
            let x = i as f64;
            if x <= centers[0] {
                (0, 0, 0.0)
            } else if x >= centers[last] {
                (last, last, 0.0)
            } else {
                let k = centers.iter().rposition(|&c| c <= x).unwrap();
                let t = (x - centers[k]) / (centers[k + 1] - centers[k]);
                (k, k + 1, t)
            }
        })
        .collect()
}

/// Per-tile lookup tables plus the bilinear blending weights of each row and column.
struct ClaheMapping {
    tiles_x: usize,
    maps: Vec<TileMap>,
    xw: Vec<(usize, usize, f64)>,
    yw: Vec<(usize, usize, f64)>,
}

impl ClaheMapping {
    fn build(p: &ImagePlane, params: ClaheParams) -> Self {
        let (w, h) = p.dims();
        let tx = params.tiles_x.min(w);
        let ty = params.tiles_y.min(h);
        let xb = tile_bounds(w, tx);
        let yb = tile_bounds(h, ty);
        let maps = yb
            .iter()
            .flat_map(|&ys| xb.iter().map(move |&xs| (xs, ys)))
            .map(|(xs, ys)| tile_map(p, xs, ys, params.clip_limit))
            .collect();
        Self {
            tiles_x: tx,
            maps,
            xw: axis_weights(w, &xb),
            yw: axis_weights(h, &yb),
        }
    }

    #[inline]
    fn apply_at(&self, x: usize, y: usize, v: f64) -> f64 {
        let (i0, i1, fx) = self.xw[x];
        let (j0, j1, fy) = self.yw[y];
        let b = bin_of(v);
        let m = |i: usize, j: usize| self.maps[j * self.tiles_x + i].apply(v, b);
        let top = (1.0 - fx) * m(i0, j0) + fx * m(i1, j0);
        let bottom = (1.0 - fx) * m(i0, j1) + fx * m(i1, j1);
        ((1.0 - fy) * top + fy * bottom).clamp(0.0, 1.0)
    }
}

pub fn clahe(p: &ImagePlane, params: ClaheParams) -> ImagePlane {
    assert!(params.clip_limit > 0.0, "clip limit must be positive");
    assert!(params.tiles_x >= 1 && params.tiles_y >= 1, "need at least one tile");
    let mapping = ClaheMapping::build(p, params);
    let (w, h) = p.dims();
    ImagePlane::from_fn(w, h, |x, y| mapping.apply_at(x, y, p.get(x, y)))
}
