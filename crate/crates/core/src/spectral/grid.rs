use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)` with `N` nodes.
///
/// Spectral arrays are stored in FFT order: index `k` in `0..N/2` is mode `k`,
/// index `k` in `N/2..N` is mode `k - N`. Index `N/2` is the single Nyquist
/// mode `-N/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period length must be positive and finite, got {length}"
            )));
        }
        if points < Self::MIN_POINTS || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "number of points must be even and >= {}, got {points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { length, points })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Integer mode number of FFT-ordered index `k`.
    #[inline]
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT-ordered index of integer mode `m`, if `m` lies on the lattice.
    #[inline]
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let half = (self.points / 2) as i64;
        if m >= -half && m < half {
            Some(m.rem_euclid(self.points as i64) as usize)
        } else {
            None
        }
    }

    #[inline]
    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    /// Lattice spacing `2π/L` in frequency.
    #[inline]
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Frequency `ξ_k` of FFT-ordered index `k`.
    #[inline]
    pub fn wavenumber(&self, k: usize) -> f64 {
        self.dxi() * self.mode(k) as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.wavenumber(k)).collect()
    }

    /// Largest resolved frequency `Nπ/L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.points as f64 / self.length
    }

    /// Same period, `factor` times the nodes.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.length, self.points * factor)
    }

    /// Period `L/λ` with the same number of nodes; used for the scaling
    /// symmetry `q ↦ λ² q(λ x)`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.length / lambda, self.points)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}
