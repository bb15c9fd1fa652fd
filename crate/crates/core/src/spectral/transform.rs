//! Discrete Fourier transform with the symmetric `1/√(2π)` convention.
//!
//! For samples `f_j = f(x_j)` with `x_j = -L/2 + j dx`, the coefficient at
//! lattice frequency `ξ_k` is
//!
//! ```text
//! f̂_k = dx/√(2π) · Σ_j f_j e^{-i ξ_k x_j}
//! ```
//!
//! i.e. the trapezoid approximation of `(2π)^{-1/2} ∫ e^{-iξx} f(x) dx`.
//! Parseval then reads `Σ |f̂_k|² (2π/L) = dx Σ |f_j|²`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{Field, Grid};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let forward = matches!(direction, FftDirection::Forward);
    let mut cache = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("fft plan cache poisoned");
    cache
        .entry((len, forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Unnormalized forward FFT, in place.
pub(crate) fn fft(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Forward).process(buf);
}

/// Unnormalized inverse FFT, in place.
pub(crate) fn ifft(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Inverse).process(buf);
}

#[inline]
fn parity(mode: i64) -> f64 {
    if mode.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Spectral coefficients of a field on a grid, FFT-ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.points(), "spectrum length mismatch");
        Self { grid, coeffs }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::new(grid, vec![Complex64::new(0.0, 0.0); grid.points()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of integer mode `m`, zero off the lattice.
    pub fn mode(&self, m: i64) -> Complex64 {
        self.grid
            .index_of(m)
            .map_or(Complex64::new(0.0, 0.0), |k| self.coeffs[k])
    }

    /// Largest violation of `f̂(-ξ) = conj f̂(ξ)` over the symmetric lattice.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.points();
        let mut worst = self.coeffs[0].im.abs();
        for k in 1..n / 2 {
            worst = worst.max((self.coeffs[n - k] - self.coeffs[k].conj()).norm());
        }
        worst.max(self.coeffs[n / 2].im.abs())
    }

    /// Maximum imaginary part of the physical-space samples this spectrum
    /// would produce.
    pub fn imaginary_residue(&self) -> f64 {
        let mut buf = self.physical_buffer();
        ifft(&mut buf);
        let scale = self.inverse_scale();
        buf.iter().map(|z| (z.im * scale).abs()).fold(0.0, f64::max)
    }

    fn inverse_scale(&self) -> f64 {
        (2.0 * PI).sqrt() / (self.grid.dx() * self.grid.points() as f64)
    }

    fn physical_buffer(&self) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * parity(self.grid.mode(k)))
            .collect()
    }

    /// Inverse transform; the imaginary part (rounding only, for a
    /// Hermitian spectrum) is discarded.
    pub fn to_field(&self) -> Field {
        let mut buf = self.physical_buffer();
        ifft(&mut buf);
        let scale = self.inverse_scale();
        Field::from_samples_unchecked(self.grid, buf.iter().map(|z| z.re * scale).collect())
    }

    /// Inverse transform keeping both parts.
    pub fn to_complex_samples(&self) -> Vec<Complex64> {
        let mut buf = self.physical_buffer();
        ifft(&mut buf);
        let scale = self.inverse_scale();
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }
}

pub(crate) fn forward_samples(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    let scale = grid.dx() / (2.0 * PI).sqrt();
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= scale * parity(grid.mode(k));
    }
    buf
}

/// Forward transform of a field. Total.
pub fn forward_transform(f: &Field) -> Spectrum {
    Spectrum::new(*f.grid(), f.spectrum().to_vec())
}

/// Inverse transform back to a real field.
pub fn inverse_transform(s: &Spectrum) -> Field {
    s.to_field()
}
