//! Pseudospectral products with zero-padding.
//!
//! Inputs are interpolated onto `M = 3N/2` nodes, multiplied there and
//! projected back onto the modes `|k| < N/2`. Every retained mode of the
//! product is then free of aliasing.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::transform::{fft, ifft};
use super::{Field, Grid};
use crate::error::Result;

fn padded_len(n: usize) -> usize {
    3 * n / 2
}

#[inline]
fn sign(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Samples of the trigonometric interpolant on the padded grid; the Nyquist
/// coefficient is dropped.
fn to_padded(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = grid.points();
    let m = padded_len(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        if k == n / 2 {
            continue;
        }
        let mode = grid.mode(k);
        buf[mode.rem_euclid(m as i64) as usize] = coeffs[k] * sign(mode);
    }
    ifft(&mut buf);
    let scale = (2.0 * PI).sqrt() / grid.length();
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

fn from_padded(grid: &Grid, mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let n = grid.points();
    let m = buf.len();
    fft(&mut buf);
    let scale = grid.length() / (m as f64 * (2.0 * PI).sqrt());
    (0..n)
        .map(|k| {
            if k == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            let mode = grid.mode(k);
            buf[mode.rem_euclid(m as i64) as usize] * (scale * sign(mode))
        })
        .collect()
}

/// Dealiased product of spectra given in FFT order on `grid`.
pub(crate) fn product_coeffs(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let pa = to_padded(grid, a);
    let pb = to_padded(grid, b);
    let prod = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| Complex64::new(x.re * y.re, 0.0))
        .collect();
    from_padded(grid, prod)
}

pub(crate) fn product_unchecked(f: &Field, g: &Field) -> Field {
    let coeffs = product_coeffs(f.grid(), f.spectrum(), g.spectrum());
    super::Spectrum::new(*f.grid(), coeffs).to_field()
}

/// Dealiased pointwise product `f·g`.
pub fn dealiased_product(f: &Field, g: &Field) -> Result<Field> {
    f.grid().ensure_same(g.grid())?;
    Ok(product_unchecked(f, g))
}

/// Dealiased `f·g·h`, two passes.
pub(crate) fn triple_product(f: &Field, g: &Field, h: &Field) -> Field {
    product_unchecked(&product_unchecked(f, g), h)
}
