use crate::error::{Error, Result};
use crate::imaging::ImagePlane;

use super::field::DisplacementField;
use super::ncc::local_ncc;
use super::regularizer::diffusive_reg;
use super::warp::warp_with_grad;

#[derive(Clone, Debug)]
pub struct ObjectiveValue {
    pub value: f64,
    pub similarity: f64,
    pub regularization: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

/// `local_ncc(warp(src, u), tgt) + theta * diffusive_reg(u)` and its gradient
/// with respect to both field channels.
pub fn objective(
    src: &ImagePlane,
    tgt: &ImagePlane,
    u: &DisplacementField,
    theta: f64,
    window: usize,
) -> Result<ObjectiveValue> {
    if src.dims() != tgt.dims() {
        return Err(Error::ShapeMismatch {
            expected: tgt.dims(),
            actual: src.dims(),
        });
    }
    let warped = warp_with_grad(src, u)?;
    let moved = ImagePlane::new(src.width(), src.height(), warped.values)?;
    let sim = local_ncc(&moved, tgt, window)?;
    let mut grad_x: Vec<f64> = sim.grad.iter().zip(&warped.gx).map(|(g, d)| g * d).collect();
    let mut grad_y: Vec<f64> = sim.grad.iter().zip(&warped.gy).map(|(g, d)| g * d).collect();
    let mut regularization = 0.0;
    if theta != 0.0 {
        let reg = diffusive_reg(u);
        regularization = reg.value;
        for (g, r) in grad_x.iter_mut().zip(&reg.grad_x) {
            *g += theta * r;
        }
        for (g, r) in grad_y.iter_mut().zip(&reg.grad_y) {
            *g += theta * r;
        }
    }
    Ok(ObjectiveValue {
        value: sim.cost + theta * regularization,
        similarity: sim.cost,
        regularization,
        grad_x,
        grad_y,
    })
}
