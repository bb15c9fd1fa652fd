//! Dense spectral-basis realization of `−∂² + q + ϰ²`.
//!
//! The operator acts on trigonometric polynomials with modes
//! `|k| ≤ M/2 − 1`, where `M = oversample · N`. Multiplication by `q`
//! becomes the Toeplitz matrix `Q_{km} = a_{k−m}` built from the Fourier
//! series coefficients `a_p = √(2π) q̂_p / L` (no wraparound). Diagonals of
//! integral kernels are read off as Fourier series
//! `b_p = (1/L) Σ_{k−m=p} T_{km}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::series::h1_unchecked;
use crate::error::{check_kappa, Error, Result};
use crate::spectral::{Field, Grid, Spectrum};

/// Basis in which an [`OperatorMatrix`] is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Plane waves `e^{iξ_k x}/√L`, modes listed in increasing order.
    Spectral,
}

/// Dense matrix of an operator on the truncated lattice.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub basis: Basis,
    /// Integer modes indexing rows and columns.
    pub modes: Vec<i64>,
    pub matrix: DMatrix<Complex64>,
    length: f64,
}

pub(crate) struct Lattice {
    pub modes: Vec<i64>,
    pub xi: Vec<f64>,
    pub length: f64,
}

impl Lattice {
    pub(crate) fn new(grid: &Grid, oversample: usize) -> Self {
        let half = (oversample * grid.points() / 2) as i64;
        let modes: Vec<i64> = (-half + 1..half).collect();
        let xi = modes.iter().map(|&m| grid.dxi() * m as f64).collect();
        Self {
            modes,
            xi,
            length: grid.length(),
        }
    }

    fn size(&self) -> usize {
        self.modes.len()
    }
}

/// Fourier series coefficients `a_p`, `|p| < N/2`, indexed by `p + N/2`.
fn series_coefficients(q: &Field) -> (Vec<Complex64>, i64) {
    let g = q.grid();
    let half = (g.points() / 2) as i64;
    let c = q.spectrum();
    let scale = (2.0 * PI).sqrt() / g.length();
    let a = (-half..half)
        .map(|p| {
            if p == -half {
                Complex64::new(0.0, 0.0)
            } else {
                c[g.index_of(p).unwrap()] * scale
            }
        })
        .collect();
    (a, half)
}

fn potential_matrix(q: &Field, lat: &Lattice) -> DMatrix<Complex64> {
    let (a, half) = series_coefficients(q);
    let n = lat.size();
    DMatrix::from_fn(n, n, |i, j| {
        let p = lat.modes[i] - lat.modes[j];
        if p > -half && p < half {
            a[(p + half) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Reads the diagonal of the kernel of `T` as a field on `grid`.
fn kernel_diagonal(grid: &Grid, lat: &Lattice, t: impl Fn(usize, usize) -> Complex64) -> Field {
    let n = grid.points();
    let half = (n / 2) as i64;
    let size = lat.size();
    let to_dft = 1.0 / (2.0 * PI).sqrt();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for p in (-half + 1)..half {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..size {
            let j = i as i64 - p;
            if j >= 0 && (j as usize) < size {
                acc += t(i, j as usize);
            }
        }
        coeffs[grid.index_of(p).unwrap()] = acc * to_dft;
    }
    Spectrum::new(*grid, coeffs).to_field()
}

/// `(1/L) Σ_m r_m r_{m+p}` over the lattice, for `r = 1/(ξ² + ϰ²)`.
fn lattice_pair_sum(lat: &Lattice, kappa: f64, p: i64) -> f64 {
    let k2 = kappa * kappa;
    let size = lat.size() as i64;
    let mut s = 0.0;
    for i in 0..size {
        let j = i + p;
        if j >= 0 && j < size {
            let (a, b) = (lat.xi[i as usize], lat.xi[j as usize]);
            s += 1.0 / ((a * a + k2) * (b * b + k2));
        }
    }
    s / lat.length
}

/// Difference between the line value `∫ dξ/(2π) r(ξ) r(ξ+ξ_p)` and its
/// truncated lattice sum, for every output mode `p`.
fn first_order_tail(grid: &Grid, lat: &Lattice, kappa: f64) -> Vec<f64> {
    let k4 = 4.0 * kappa * kappa;
    (0..grid.points())
        .map(|k| {
            let xi = grid.wavenumber(k);
            1.0 / (kappa * (xi * xi + k4)) - lattice_pair_sum(lat, kappa, grid.mode(k))
        })
        .collect()
}

impl OperatorMatrix {
    /// `√R_0(ϰ) q √R_0(ϰ)` on the lattice of `q`'s grid refined by
    /// `oversample`.
    pub fn sandwich(q: &Field, kappa: f64, oversample: usize) -> Result<Self> {
        check_kappa("kappa", kappa)?;
        let lat = Lattice::new(q.grid(), oversample.max(1));
        let k2 = kappa * kappa;
        let s: Vec<f64> = lat.xi.iter().map(|x| 1.0 / (x * x + k2).sqrt()).collect();
        let mut m = potential_matrix(q, &lat);
        for j in 0..lat.size() {
            for i in 0..lat.size() {
                m[(i, j)] *= s[i] * s[j];
            }
        }
        Ok(Self {
            basis: Basis::Spectral,
            modes: lat.modes,
            matrix: m,
            length: lat.length,
        })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn period(&self) -> f64 {
        self.length
    }
}

/// Squared Hilbert-Schmidt norm of `√R_0 q √R_0` on the line: the lattice
/// Frobenius norm plus the part of the frequency sum cut off by the lattice.
pub fn hilbert_schmidt_sqr(q: &Field, kappa: f64, oversample: usize) -> Result<f64> {
    let op = OperatorMatrix::sandwich(q, kappa, oversample)?;
    let lat = Lattice::new(q.grid(), oversample.max(1));
    let tail = first_order_tail(q.grid(), &lat, kappa);
    let g = q.grid();
    let c = q.spectrum();
    let scale = 2.0 * PI / (g.length() * g.length());
    let correction: f64 = (0..g.points())
        .filter(|&k| k != g.nyquist_index())
        .map(|k| c[k].norm_sqr() * scale * g.length() * tail[k])
        .sum();
    Ok(op.frobenius_norm_sqr() + correction)
}

/// `(−1)^ℓ ⟨√R_0 δ_x, A^ℓ √R_0 δ_x⟩` with `A = √R_0 q √R_0`, by dense
/// matrix powers. The `ℓ = 1` term includes the frequency tail beyond the
/// lattice.
pub fn h_ell_series(q: &Field, kappa: f64, ell: usize, oversample: usize, limit: usize) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    if ell == 0 {
        return Err(Error::InvalidParameter {
            name: "ell",
            reason: "series index starts at 1".into(),
        });
    }
    let grid = q.grid();
    let lat = Lattice::new(grid, oversample.max(1));
    let size = lat.size();
    if size * ell > limit {
        return Err(Error::ResourceLimit {
            size: size * ell,
            limit,
        });
    }
    let k2 = kappa * kappa;
    let r: Vec<f64> = lat.xi.iter().map(|x| 1.0 / (x * x + k2)).collect();
    // B = R_0 Q
    let mut b = potential_matrix(q, &lat);
    for i in 0..size {
        for j in 0..size {
            b[(i, j)] *= r[i];
        }
    }
    let mut t = b.clone();
    for _ in 1..ell {
        t = &b * &t;
    }
    let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = kernel_diagonal(grid, &lat, |i, j| t[(i, j)] * r[j] * sign);
    if ell == 1 {
        let tail = first_order_tail(grid, &lat, kappa);
        let coeffs: Vec<Complex64> = q
            .spectrum()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == grid.nyquist_index() {
                    Complex64::new(0.0, 0.0)
                } else {
                    -c * tail[k]
                }
            })
            .collect();
        out = &out + &Spectrum::new(*grid, coeffs).to_field();
    }
    Ok(out)
}

/// `g − 1/(2ϰ) − h_1` from a dense inverse: the kernel diagonal of
/// `R_0 Q R Q R_0 = R − R_0 + R_0 Q R_0`.
pub(crate) fn nonlinear_excess_dense(q: &Field, kappa: f64, oversample: usize, limit: usize) -> Result<Field> {
    let grid = q.grid();
    let lat = Lattice::new(grid, oversample.max(1));
    let size = lat.size();
    if size > limit {
        return Err(Error::ResourceLimit { size, limit });
    }
    let k2 = kappa * kappa;
    let r: Vec<f64> = lat.xi.iter().map(|x| 1.0 / (x * x + k2)).collect();
    let qm = potential_matrix(q, &lat);
    let mut h = qm.clone();
    for i in 0..size {
        h[(i, i)] += Complex64::new(1.0 / r[i], 0.0);
    }
    let lu = h.lu();
    let (mut umax, mut umin) = (0.0f64, f64::INFINITY);
    for i in 0..size {
        let d = lu.u()[(i, i)].norm();
        umax = umax.max(d);
        umin = umin.min(d);
    }
    let condition = umax / umin;
    if !condition.is_finite() || condition > 1e12 {
        return Err(Error::NearSingular { condition });
    }
    // X = R Q R_0
    let mut qr = qm.clone();
    for j in 0..size {
        for i in 0..size {
            qr[(i, j)] *= r[j];
        }
    }
    let x = lu.solve(&qr).ok_or(Error::NearSingular { condition })?;
    // T = R_0 Q X, needed on |k − m| < N/2 only; Q is banded with the same width.
    let band = (grid.points() / 2) as i64;
    let t = |i: usize, j: usize| {
        let lo = (i as i64 - band + 1).max(0) as usize;
        let hi = ((i as i64 + band - 1) as usize).min(size - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for l in lo..=hi {
            acc += qm[(i, l)] * x[(l, j)];
        }
        acc * r[i]
    };
    Ok(kernel_diagonal(grid, &lat, t))
}

/// `g − 1/(2ϰ)` from the dense inverse, first order in closed form.
pub(crate) fn excess_dense(q: &Field, kappa: f64, oversample: usize, limit: usize) -> Result<(Field, Field)> {
    let nl = nonlinear_excess_dense(q, kappa, oversample, limit)?;
    let h1 = h1_unchecked(q, kappa);
    Ok((&h1 + &nl, nl))
}
