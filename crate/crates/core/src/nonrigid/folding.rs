use super::field::DisplacementField;

/// Per-pixel Jacobian determinant of `(x, y) -> (x + ux, y + uy)` with forward
/// differences. The last row and column reuse the difference of their
/// neighbor, so affine fields have a constant determinant everywhere.
pub fn jacobian_determinant(u: &DisplacementField) -> Vec<f64> {
    let (w, h) = u.dims();
    let (ux, uy) = (u.ux(), u.uy());
    let mut det = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (dxx, dyx) = if x + 1 < w {
                (ux[i + 1] - ux[i], uy[i + 1] - uy[i])
            } else if x > 0 {
                (ux[i] - ux[i - 1], uy[i] - uy[i - 1])
            } else {
                (0.0, 0.0)
            };
            let (dxy, dyy) = if y + 1 < h {
                (ux[i + w] - ux[i], uy[i + w] - uy[i])
            } else if y > 0 {
                (ux[i] - ux[i - w], uy[i] - uy[i - w])
            } else {
                (0.0, 0.0)
            };
            det.push((1.0 + dxx) * (1.0 + dyy) - dxy * dyx);
        }
    }
    det
}

/// Fraction of pixels whose Jacobian determinant is not positive.
pub fn folding_ratio(u: &DisplacementField) -> f64 {
    let det = jacobian_determinant(u);
    det.iter().filter(|&&d| d <= 0.0).count() as f64 / det.len() as f64
}
