use super::field::DisplacementField;

#[derive(Clone, Debug)]
pub struct RegResult {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

fn channel(c: &[f64], w: usize, h: usize, grad: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let d = c[i + 1] - c[i];
                sum += d * d;
                grad[i] -= d;
                grad[i + 1] += d;
            }
            if y + 1 < h {
                let d = c[i + w] - c[i];
                sum += d * d;
                grad[i] -= d;
                grad[i + w] += d;
            }
        }
    }
    sum
}

/// Diffusive regularizer `1/(2wh) * sum(|grad ux|^2 + |grad uy|^2)` with
/// forward differences (zero past the last row and column) and its gradient.
pub fn diffusive_reg(u: &DisplacementField) -> RegResult {
    let (w, h) = u.dims();
    let n = (w * h) as f64;
    let mut grad_x = vec![0.0; w * h];
    let mut grad_y = vec![0.0; w * h];
    let sx = channel(u.ux(), w, h, &mut grad_x);
    let sy = channel(u.uy(), w, h, &mut grad_y);
    grad_x.iter_mut().chain(grad_y.iter_mut()).for_each(|g| *g /= n);
    RegResult {
        value: (sx + sy) / (2.0 * n),
        grad_x,
        grad_y,
    }
}
