//! Initial data.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::{h_minus1_norm, Field, Grid, Spectrum};

/// Seeded random field with modes `|k| < max_mode`, scaled so that its
/// `H^{-1}` norm equals `hm1_norm`.
pub fn random_band_limited(grid: Grid, hm1_norm: f64, seed: u64, max_mode: usize) -> Result<Field> {
    if !(hm1_norm.is_finite() && hm1_norm >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "hm1_norm",
            reason: format!("must be finite and non-negative, got {hm1_norm}"),
        });
    }
    if max_mode == 0 || max_mode > grid.points() / 2 {
        return Err(Error::InvalidParameter {
            name: "max_mode",
            reason: format!("must lie in 1..={}, got {max_mode}", grid.points() / 2),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    coeffs[0] = Complex64::new(draw(), 0.0);
    for k in 1..max_mode.min(n / 2) {
        let c = Complex64::new(draw(), draw());
        coeffs[k] = c;
        coeffs[n - k] = c.conj();
    }
    let f = Spectrum::new(grid, coeffs).to_field();
    let norm = h_minus1_norm(&f);
    Ok(if norm > 0.0 { f.scale(hm1_norm / norm) } else { f })
}

/// `amplitude · exp(−(x − center)²/width²)`.
pub fn gaussian(grid: Grid, amplitude: f64, width: f64, center: f64) -> Field {
    Field::from_fn(grid, |x| amplitude * (-((x - center) / width).powi(2)).exp())
}

/// KdV soliton profile `−2κ₀² sech²(κ₀(x − center))`.
pub fn soliton(grid: Grid, kappa0: f64, center: f64) -> Field {
    Field::from_fn(grid, |x| {
        let s = 1.0 / (kappa0 * (x - center)).cosh();
        -2.0 * kappa0 * kappa0 * s * s
    })
}

/// `amplitude · cos(wavenumber · x)`.
pub fn cosine(grid: Grid, amplitude: f64, wavenumber: f64) -> Field {
    Field::from_fn(grid, |x| amplitude * (wavenumber * x).cos())
}

/// Rescales `q` to the given `H^{-1}` norm.
pub fn with_h_minus1_norm(q: &Field, hm1_norm: f64) -> Field {
    let n = h_minus1_norm(q);
    if n > 0.0 {
        q.scale(hm1_norm / n)
    } else {
        q.clone()
    }
}
