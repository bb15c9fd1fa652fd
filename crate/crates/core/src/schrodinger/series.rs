//! Series terms `h_ℓ` of the diagonal Green's function.
//!
//! `h_1` and `h_2` have closed Fourier forms. Higher terms follow from the
//! quadratic identity `−2 g g'' + (g')² + 4(q + ϰ²) g² = 1` satisfied by the
//! diagonal Green's function: collecting the terms of order `ℓ` gives
//!
//! ```text
//! h_ℓ = −ϰ R_0(2ϰ) [ Σ_{i+j=ℓ} (−2 h_i h_j'' + h_i' h_j' + 4ϰ² h_i h_j)
//!                   + (4/ϰ) q h_{ℓ−1} + 4 q Σ_{i+j=ℓ−1} h_i h_j ]
//! ```
//!
//! with all indices `≥ 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_kappa, Result};
use crate::spectral::{self, ops, Field, Grid, Spectrum};

/// `h_1 = −(1/ϰ) R_0(2ϰ) q`.
pub fn h1(q: &Field, kappa: f64) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    Ok(h1_unchecked(q, kappa))
}

pub(crate) fn h1_unchecked(q: &Field, kappa: f64) -> Field {
    let k4 = 4.0 * kappa * kappa;
    ops::even_multiplier(q, move |xi| -1.0 / (kappa * (xi * xi + k4)))
}

/// Quadratic term `h_2`, evaluated as a direct double sum over lattice
/// frequencies.
pub fn h2(q: &Field, kappa: f64) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    Ok(h2_unchecked(q, kappa))
}

pub(crate) fn h2_unchecked(q: &Field, kappa: f64) -> Field {
    let g = q.grid();
    let n = g.points();
    let half = (n / 2) as i64;
    let c = q.spectrum();
    let k4 = 4.0 * kappa * kappa;
    let xi: Vec<f64> = (0..n).map(|k| g.wavenumber(k)).collect();
    let w: Vec<f64> = xi.iter().map(|x| 1.0 / (x * x + k4)).collect();
    let prefactor = g.dxi() / (2.0 * kappa * (2.0 * PI).sqrt());
    let modes: Vec<i64> = (-half + 1..half).collect();

    let coeffs: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mk = g.mode(k);
            if mk == -half {
                return Complex64::new(0.0, 0.0);
            }
            let (x, wx) = (xi[k], w[k]);
            let mut acc = Complex64::new(0.0, 0.0);
            for &mm in &modes {
                let d = mk - mm;
                if d <= -half || d >= half {
                    continue;
                }
                let j = g.index_of(mm).expect("on lattice");
                let i = g.index_of(d).expect("on lattice");
                let (e, dd) = (xi[j], xi[i]);
                let kernel = (x * x + dd * dd + e * e + 6.0 * k4) * wx * w[i] * w[j];
                acc += kernel * c[i] * c[j];
            }
            acc * prefactor
        })
        .collect();
    Spectrum::new(*g, coeffs).to_field()
}

/// Padded-grid samples of `f`, `f'` and `f''`.
struct Padded {
    f: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn pad_len(n: usize) -> usize {
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

fn to_padded_real(grid: &Grid, coeffs: &[Complex64], order: u32) -> Vec<f64> {
    let n = grid.points();
    let m = pad_len(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        if k == n / 2 {
            continue;
        }
        let mode = grid.mode(k);
        let factor = Complex64::new(0.0, grid.wavenumber(k)).powu(order);
        buf[mode.rem_euclid(m as i64) as usize] = coeffs[k] * factor * sign(mode);
    }
    spectral::ifft(&mut buf);
    let scale = (2.0 * PI).sqrt() / grid.length();
    buf.iter().map(|z| z.re * scale).collect()
}

fn from_padded_real(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let n = grid.points();
    let m = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral::fft(&mut buf);
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

impl Padded {
    fn new(f: &Field, with_derivatives: bool) -> Self {
        let g = f.grid();
        let c = f.spectrum();
        let s = to_padded_real(g, c, 0);
        if with_derivatives {
            Self {
                f: s,
                d1: to_padded_real(g, c, 1),
                d2: to_padded_real(g, c, 2),
            }
        } else {
            Self {
                f: s,
                d1: Vec::new(),
                d2: Vec::new(),
            }
        }
    }
}

/// Incremental evaluation of `h_1, h_2, …`.
pub(crate) struct Recursion<'a> {
    q: &'a Field,
    kappa: f64,
    q_padded: Padded,
    terms: Vec<Field>,
    padded: Vec<Padded>,
}

impl<'a> Recursion<'a> {
    /// Starts from `h_1`; `h_2` onwards come from the recursion, whose first
    /// step coincides with the double sum of [`h2`] up to rounding.
    pub(crate) fn new(q: &'a Field, kappa: f64) -> Self {
        let h1 = h1_unchecked(q, kappa);
        let padded = vec![Padded::new(&h1, true)];
        Self {
            q,
            kappa,
            q_padded: Padded::new(q, false),
            terms: vec![h1],
            padded,
        }
    }

    /// `h_ℓ`, 1-based; computes missing terms on demand.
    pub(crate) fn term(&mut self, ell: usize) -> &Field {
        assert!(ell >= 1);
        while self.terms.len() < ell {
            self.advance();
        }
        &self.terms[ell - 1]
    }

    fn advance(&mut self) {
        let ell = self.terms.len() + 1;
        let grid = *self.q.grid();
        let kappa = self.kappa;
        let k2 = kappa * kappa;
        let m = self.q_padded.f.len();

        let mut bilinear = vec![0.0; m];
        for i in 1..ell {
            let j = ell - i;
            let (a, b) = (&self.padded[i - 1], &self.padded[j - 1]);
            for t in 0..m {
                bilinear[t] += -2.0 * a.f[t] * b.d2[t] + a.d1[t] * b.d1[t] + 4.0 * k2 * a.f[t] * b.f[t];
            }
        }
        // second pass: q times (linear + quadratic) in h
        let mut inner = vec![0.0; m];
        let prev = &self.padded[ell - 2];
        for t in 0..m {
            inner[t] = 4.0 / kappa * prev.f[t];
        }
        for i in 1..ell.saturating_sub(1) {
            let j = ell - 1 - i;
            let (a, b) = (&self.padded[i - 1], &self.padded[j - 1]);
            for t in 0..m {
                inner[t] += 4.0 * a.f[t] * b.f[t];
            }
        }
        let inner_c = from_padded_real(&grid, &inner);
        let inner_p = to_padded_real(&grid, &inner_c, 0);
        for t in 0..m {
            bilinear[t] += self.q_padded.f[t] * inner_p[t];
        }
        let s = from_padded_real(&grid, &bilinear);
        let k4 = 4.0 * k2;
        let coeffs = s
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let xi = grid.wavenumber(k);
                c * (-kappa / (xi * xi + k4))
            })
            .collect();
        let h = Spectrum::new(grid, coeffs).to_field();
        self.padded.push(Padded::new(&h, true));
        self.terms.push(h);
    }
}

/// `h_ℓ` for `ℓ ≥ 1`: closed form for `ℓ = 1`, recursion beyond.
pub fn h_ell_recursive(q: &Field, kappa: f64, ell: usize) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    if ell == 0 {
        return Err(crate::Error::InvalidParameter {
            name: "ell",
            reason: "series index starts at 1".into(),
        });
    }
    Ok(Recursion::new(q, kappa).term(ell).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::random_band_limited;

    #[test]
    fn zero_data_gives_zero_terms() {
        let g = Grid::new(10.0, 32).unwrap();
        let q = Field::zeros(g);
        assert_eq!(h1(&q, 1.0).unwrap().max_abs(), 0.0);
        assert_eq!(h2(&q, 1.0).unwrap().max_abs(), 0.0);
        assert_eq!(h_ell_recursive(&q, 2.0, 5).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn h1_single_mode() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q = Field::from_fn(g, |x| (3.0 * x).cos());
        let h = h1(&q, 1.0).unwrap();
        let expect = Field::from_fn(g, |x| -(3.0 * x).cos() / 13.0);
        assert!(h.max_abs_diff(&expect) < 1e-15);
    }

    /// Evaluates the quadratic kernel by hand on the four frequency pairs
    /// contributed by `ε cos(kx)`.
    #[test]
    fn h2_single_mode_hand_sum() {
        let (eps, k, kappa) = (0.3, 2.0, 1.5);
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q = Field::from_fn(g, |x| eps * (k * x).cos());
        let h = h2(&q, kappa).unwrap();
        let k4 = 4.0 * kappa * kappa;
        let kern = |xi: f64, eta: f64| {
            let d = xi - eta;
            (xi * xi + d * d + eta * eta + 6.0 * k4) / ((xi * xi + k4) * (d * d + k4) * (eta * eta + k4))
        };
        // q̂(±k) = ε √(2π)/2 · (L/2π) = ε √(2π) / 2 on L = 2π
        let c = eps * (2.0 * PI).sqrt() / 2.0;
        let pre = 1.0 / (2.0 * kappa * (2.0 * PI).sqrt());
        let zero = pre * c * c * (kern(0.0, k) + kern(0.0, -k));
        let two = pre * c * c * kern(2.0 * k, k);
        // back to samples: f = (√(2π)/L) Σ ĉ e^{iξx}
        let s = (2.0 * PI).sqrt() / (2.0 * PI);
        let expect = Field::from_fn(g, |x| s * (zero + 2.0 * two * (2.0 * k * x).cos()));
        assert!(h.max_abs_diff(&expect) < 1e-15, "{}", h.max_abs_diff(&expect));
    }

    #[test]
    fn recursion_reproduces_h2() {
        let g = Grid::new(40.0, 128).unwrap();
        for (seed, band) in [(7, 16), (8, 64)] {
            let q = random_band_limited(g, 0.2, seed, band).unwrap();
            for kappa in [1.0, 2.5, 7.0] {
                let direct = h2(&q, kappa).unwrap();
                let mut rec = Recursion::new(&q, kappa);
                let via = rec.term(2);
                assert!(
                    via.max_abs_diff(&direct) < 1e-14 * direct.max_abs(),
                    "kappa {kappa}: {} vs {}",
                    via.max_abs_diff(&direct),
                    direct.max_abs()
                );
            }
        }
    }

    #[test]
    fn higher_terms_shrink_geometrically() {
        let g = Grid::new(40.0, 128).unwrap();
        let q = random_band_limited(g, 0.2, 3, 32).unwrap();
        let kappa = 1.0;
        let eps = crate::spectral::hm1k(&q, kappa) / kappa.sqrt();
        let mut rec = Recursion::new(&q, kappa);
        for ell in 1..=6 {
            let h = rec.term(ell);
            let bound = kappa.powf(-(ell as f64 + 2.0) / 2.0) * crate::spectral::hm1k(&q, kappa).powi(ell as i32);
            assert!(
                h.max_abs() <= bound,
                "ell {ell}: {:e} > {bound:e} (eps {eps})",
                h.max_abs()
            );
        }
    }
}
