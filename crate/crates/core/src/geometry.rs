//! Affine transform algebra.
//!
//! Transforms use backward mapping throughout: an `AffineTransform` maps a
//! pixel of the output (target) frame to the position to sample in the input
//! (source) frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonrigid::DisplacementField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// 2x3 matrix `[[a, b, tx], [c, d, ty]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    #[serde(rename = "matrix")]
    pub m: [[f64; 3]; 2],
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub const fn new(m: [[f64; 3]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    }

    pub const fn translation(tx: f64, ty: f64) -> Self {
        Self::new([[1.0, 0.0, tx], [0.0, 1.0, ty]])
    }

    pub const fn scaling(sx: f64, sy: f64) -> Self {
        Self::new([[sx, 0.0, 0.0], [0.0, sy, 0.0]])
    }

    #[inline]
    pub fn apply_xy(&self, x: f64, y: f64) -> (f64, f64) {
        let [[a, b, tx], [c, d, ty]] = self.m;
        (a * x + b * y + tx, c * x + d * y + ty)
    }

    #[inline]
    pub fn apply(&self, p: Point2) -> Point2 {
        let (x, y) = self.apply_xy(p.x, p.y);
        Point2 { x, y }
    }

    pub fn apply_all(&self, pts: &[Point2]) -> Vec<Point2> {
        pts.iter().map(|&p| self.apply(p)).collect()
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Transform that applies `outer` first and then `inner`:
    /// `compose(outer, inner).apply(p) == inner.apply(outer.apply(p))`.
    pub fn compose(outer: &AffineTransform, inner: &AffineTransform) -> AffineTransform {
        let [[a1, b1, t1], [c1, d1, s1]] = outer.m;
        let [[a2, b2, t2], [c2, d2, s2]] = inner.m;
        AffineTransform::new([
            [a2 * a1 + b2 * c1, a2 * b1 + b2 * d1, a2 * t1 + b2 * s1 + t2],
            [c2 * a1 + d2 * c1, c2 * b1 + d2 * d1, c2 * t1 + d2 * s1 + s2],
        ])
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &AffineTransform) -> AffineTransform {
        Self::compose(self, next)
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::DegenerateConfiguration("affine matrix is singular"));
        }
        let [[a, b, tx], [c, d, ty]] = self.m;
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        Ok(AffineTransform::new([
            [ia, ib, -(ia * tx + ib * ty)],
            [ic, id, -(ic * tx + id * ty)],
        ]))
    }

    /// Rotation angle in degrees of the closest rotation to the linear part
    /// (polar decomposition).
    pub fn rotation_deg(&self) -> f64 {
        let [[a, b, _], [c, d, _]] = self.m;
        (c - b).atan2(a + d).to_degrees()
    }

    pub fn max_abs_diff(&self, other: &AffineTransform) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Re-expresses a transform defined between frames of sizes `from_out`
    /// (output side) and `from_in` (input side) for resized frames `to_out`, `to_in`.
    pub fn rescaled(
        &self,
        from_out: (usize, usize),
        from_in: (usize, usize),
        to_out: (usize, usize),
        to_in: (usize, usize),
    ) -> AffineTransform {
        let into_old_out = scale_map(to_out, from_out);
        let into_new_in = scale_map(from_in, to_in);
        into_old_out.then(self).then(&into_new_in)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("affine serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: AffineTransform = serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("bad affine JSON: {e}")))?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument("affine JSON has non-finite entries".into()));
        }
        Ok(t)
    }
}

pub fn affine_apply(t: &AffineTransform, pts: &[Point2]) -> Vec<Point2> {
    t.apply_all(pts)
}

pub fn compose(outer: &AffineTransform, inner: &AffineTransform) -> AffineTransform {
    AffineTransform::compose(outer, inner)
}

/// Backward map that rotates image content by `theta_deg` about the pixel-center
/// midpoint `((w-1)/2, (h-1)/2)`.
pub fn rotation_about_center(theta_deg: f64, w: usize, h: usize) -> AffineTransform {
    if theta_deg == 0.0 {
        return AffineTransform::identity();
    }
    let (s, c) = theta_deg.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    AffineTransform::new([
        [c, -s, cx - c * cx + s * cy],
        [s, c, cy - s * cx - c * cy],
    ])
}

/// Pixel-center coordinate change from a frame of size `from` to a resized
/// frame of size `to`: `x' = (x + 0.5) * to_w / from_w - 0.5`.
pub fn scale_map(from: (usize, usize), to: (usize, usize)) -> AffineTransform {
    let sx = to.0 as f64 / from.0 as f64;
    let sy = to.1 as f64 / from.1 as f64;
    AffineTransform::new([[sx, 0.0, 0.5 * sx - 0.5], [0.0, sy, 0.5 * sy - 0.5]])
}

/// Dense field `u(x, y) = t(x, y) - (x, y)` on a `w x h` grid.
pub fn affine_to_displacement(t: &AffineTransform, w: usize, h: usize) -> DisplacementField {
    let mut field = DisplacementField::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = t.apply_xy(x as f64, y as f64);
            field.set(x, y, sx - x as f64, sy - y as f64);
        }
    }
    field
}
