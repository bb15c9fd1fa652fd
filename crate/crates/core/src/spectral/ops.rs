//! Allocation-light multiplier helpers used on hot paths. All of them map
//! real fields to real fields by construction.

use num_complex::Complex64;

use super::{Field, Spectrum};

/// `∂^order f` with the Nyquist mode dropped.
pub fn derivative(f: &Field, order: u32) -> Field {
    let g = f.grid();
    let nyq = g.nyquist_index();
    let coeffs = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, g.wavenumber(k)).powu(order)
            }
        })
        .collect();
    Spectrum::new(*g, coeffs).to_field()
}

/// Multiplier by an even real symbol `m(ξ) = m(−ξ)`.
pub fn even_multiplier(f: &Field, m: impl Fn(f64) -> f64) -> Field {
    let g = f.grid();
    let coeffs = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, c)| c * m(g.wavenumber(k)))
        .collect();
    Spectrum::new(*g, coeffs).to_field()
}

/// `R_0(ϰ) f = (−∂² + ϰ²)^{-1} f`.
pub fn resolvent(f: &Field, kappa: f64) -> Field {
    let k2 = kappa * kappa;
    even_multiplier(f, move |xi| 1.0 / (xi * xi + k2))
}

/// Multiplier by `i ξ · m(ξ)` for even real `m`: an odd operator such as
/// `∂ R_0`. Nyquist dropped.
pub fn odd_multiplier(f: &Field, m: impl Fn(f64) -> f64) -> Field {
    let g = f.grid();
    let nyq = g.nyquist_index();
    let coeffs = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                let xi = g.wavenumber(k);
                c * Complex64::new(0.0, xi * m(xi))
            }
        })
        .collect();
    Spectrum::new(*g, coeffs).to_field()
}
