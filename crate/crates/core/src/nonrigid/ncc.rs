//! Windowed normalized cross-correlation and its analytic gradient.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::ImagePlane;

/// Variance guard in the NCC denominator.
pub const NCC_EPS: f64 = 1e-5;

/// Sum over the `(2r+1)^2` window around each pixel, clipped at the borders.
pub(crate) fn box_sum(data: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut horiz = vec![0.0; w * h];
    horiz.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let row = &data[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            *o = row[lo..=hi].iter().sum();
        }
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, orow)| {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for yy in lo..=hi {
            for (o, v) in orow.iter_mut().zip(&horiz[yy * w..(yy + 1) * w]) {
                *o += v;
            }
        }
    });
    out
}

#[inline]
fn clipped_len(i: usize, n: usize, r: usize) -> usize {
    (i + r).min(n - 1) - i.saturating_sub(r) + 1
}

fn check(a: &ImagePlane, b: &ImagePlane, window: usize) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "NCC window must be odd and at least 3, got {window}"
        )));
    }
    Ok(())
}

/// Sum of per-row sums, accumulated in row order.
pub(crate) fn ordered_sum(values: &[f64], w: usize) -> f64 {
    let rows: Vec<f64> = values.par_chunks(w).map(|r| r.iter().sum()).collect();
    rows.iter().sum()
}

#[derive(Clone, Debug)]
pub struct NccResult {
    /// `1 - mean(ncc)`, in `[0, 2]`.
    pub cost: f64,
    /// Derivative of `cost` with respect to each pixel of the first image.
    pub grad: Vec<f64>,
}

/// Local NCC cost of `a` against `b` over `window x window` neighborhoods
/// (clipped at the borders), with its gradient with respect to `a`.
pub fn local_ncc(a: &ImagePlane, b: &ImagePlane, window: usize) -> Result<NccResult> {
    check(a, b, window)?;
    let (w, h) = a.dims();
    let r = window / 2;
    let n_pix = (w * h) as f64;
    let av = a.data();
    let bv = b.data();

    let sq = |x: &[f64]| x.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = av.iter().zip(bv).map(|(x, y)| x * y).collect();
    let sa = box_sum(av, w, h, r);
    let sb = box_sum(bv, w, h, r);
    let saa = box_sum(&sq(av), w, h, r);
    let sbb = box_sum(&sq(bv), w, h, r);
    let sab = box_sum(&prod, w, h, r);

    let mut ncc = vec![0.0; w * h];
    // Per-pixel coefficients of the gradient expression.
    let mut alpha = vec![0.0; w * h];
    let mut alpha_mb = vec![0.0; w * h];
    let mut beta = vec![0.0; w * h];
    let mut beta_ma = vec![0.0; w * h];
    ncc.par_chunks_mut(w)
        .zip(alpha.par_chunks_mut(w))
        .zip(alpha_mb.par_chunks_mut(w))
        .zip(beta.par_chunks_mut(w))
        .zip(beta_ma.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((((nr, ar), amr), br), bmr))| {
            let ny = clipped_len(y, h, r);
            for x in 0..w {
                let i = y * w + x;
                let n = (clipped_len(x, w, r) * ny) as f64;
                let ma = sa[i] / n;
                let mb = sb[i] / n;
                let va = saa[i] / n - ma * ma + NCC_EPS;
                let vb = sbb[i] / n - mb * mb + NCC_EPS;
                let cov = sab[i] / n - ma * mb;
                let d = (va * vb).sqrt();
                let c = cov / d;
                nr[x] = c;
                ar[x] = 1.0 / (n * d);
                amr[x] = ar[x] * mb;
                br[x] = c / (n * va);
                bmr[x] = br[x] * ma;
            }
        });

    let cost = 1.0 - ordered_sum(&ncc, w) / n_pix;

    let s_alpha = box_sum(&alpha, w, h, r);
    let s_alpha_mb = box_sum(&alpha_mb, w, h, r);
    let s_beta = box_sum(&beta, w, h, r);
    let s_beta_ma = box_sum(&beta_ma, w, h, r);
    let grad = (0..w * h)
        .into_par_iter()
        .map(|q| {
            -(bv[q] * s_alpha[q] - s_alpha_mb[q] - av[q] * s_beta[q] + s_beta_ma[q]) / n_pix
        })
        .collect();
    Ok(NccResult { cost, grad })
}

/// Cost only.
pub fn local_ncc_cost(a: &ImagePlane, b: &ImagePlane, window: usize) -> Result<f64> {
    Ok(local_ncc(a, b, window)?.cost)
}
