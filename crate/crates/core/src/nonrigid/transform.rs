use crate::geometry::{AffineTransform, Point2};

use super::bspline::FieldUpsampler;
use super::field::DisplacementField;

/// Full registration result as a point mapping in a frame of size `frame`:
/// `p -> affine(p + u(p))`, where `u` is the residual field resampled to the
/// frame with B-spline semantics.
#[derive(Clone, Debug)]
pub struct ComposedTransform {
    pub affine: AffineTransform,
    frame: (usize, usize),
    field: Option<FieldUpsampler>,
}

impl ComposedTransform {
    pub fn new(affine: AffineTransform, field: Option<&DisplacementField>, frame: (usize, usize)) -> Self {
        Self {
            affine,
            frame,
            field: field.map(|u| FieldUpsampler::new(u, frame.0, frame.1)),
        }
    }

    pub fn frame(&self) -> (usize, usize) {
        self.frame
    }

    #[inline]
    pub fn map_xy(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = match &self.field {
            Some(f) => f.at_point(x, y),
            None => (0.0, 0.0),
        };
        self.affine.apply_xy(x + dx, y + dy)
    }

    pub fn map_point(&self, p: Point2) -> Point2 {
        let (x, y) = self.map_xy(p.x, p.y);
        Point2 { x, y }
    }
}
