//! Diagonal Green's function `g(x; ϰ, q)` of `−∂² + q + ϰ²`, the density
//! `ρ`, the conserved quantity `α`, and the map `q ↦ 2ϰ − 1/g`.

mod dense;
mod diffeo;
mod series;

use serde::{Deserialize, Serialize};

pub use dense::{h_ell_series, hilbert_schmidt_sqr, Basis, OperatorMatrix};
pub use diffeo::{diffeo_forward, diffeo_forward_with, diffeo_inverse, diffeo_inverse_with, NewtonReport};
pub use series::{h1, h2, h_ell_recursive};

use crate::error::{check_kappa, Error, Result};
use crate::spectral::{hm1k, Field};

/// How `g` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GreenRoute {
    /// Dense inverse of the operator on an oversampled spectral lattice.
    Direct,
    /// Neumann series `1/(2ϰ) + Σ_{ℓ ≤ max_order} h_ℓ`.
    Series { max_order: usize },
}

impl Default for GreenRoute {
    fn default() -> Self {
        GreenRoute::Series {
            max_order: GreenConfig::DEFAULT_MAX_ORDER,
        }
    }
}

/// Numerical guards of the Green's-function layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    /// Radius of the small-data ball in `H^{-1}`.
    pub delta: f64,
    /// The series route is refused once `ϰ^{-1/2} ‖q‖_{H^{-1}_ϰ}` reaches this.
    pub series_guard: f64,
    /// Largest dense lattice (matrix dimension) the direct route may build.
    pub dense_limit: usize,
    /// Dense lattice has `oversample · N` modes.
    pub oversample: usize,
}

impl GreenConfig {
    pub const DEFAULT_MAX_ORDER: usize = 12;
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            series_guard: 0.9,
            dense_limit: 2048,
            oversample: 2,
        }
    }
}

/// `g`, `ρ`, `α` for one `(q, ϰ)`.
#[derive(Clone, Debug)]
pub struct GreenReport {
    pub kappa: f64,
    pub g: Field,
    pub rho: Field,
    pub alpha: f64,
    /// Number of series terms summed; `0` on the direct route.
    pub series_terms_used: usize,
    /// Geometric bound on the omitted series terms in max-norm; `0` on the
    /// direct route.
    pub tail_estimate: f64,
    /// `g − 1/(2ϰ)`, kept separately to avoid cancellation downstream.
    pub excess: Field,
    /// `g − 1/(2ϰ) − h_1`.
    pub excess_nonlinear: Field,
}

impl GreenReport {
    fn assemble(q: &Field, kappa: f64, excess: Field, excess_nonlinear: Field, terms: usize, tail: f64) -> Self {
        let h1 = &excess - &excess_nonlinear;
        let k3 = 4.0 * kappa.powi(3);
        let rho = Field::from_samples_unchecked(
            *q.grid(),
            excess
                .samples()
                .iter()
                .zip(excess_nonlinear.samples())
                .zip(h1.samples())
                .map(|((&d, &d2), &a)| k3 * (d2 - 2.0 * kappa * d * a) / (1.0 + 2.0 * kappa * d))
                .collect(),
        );
        let alpha = rho.integral() / (2.0 * kappa);
        let g = excess.map(|d| 0.5 / kappa + d);
        Self {
            kappa,
            g,
            rho,
            alpha,
            series_terms_used: terms,
            tail_estimate: tail,
            excess,
            excess_nonlinear,
        }
    }

    /// `2ϰ − 1/g`, computed as `4ϰ²Δ/(1 + 2ϰΔ)` with `Δ = g − 1/(2ϰ)`.
    pub fn diffeo_image(&self) -> Field {
        let k = self.kappa;
        self.excess.map(|d| 4.0 * k * k * d / (1.0 + 2.0 * k * d))
    }
}

/// `ϰ^{-1/2} ‖q‖_{H^{-1}_ϰ}`, the Hilbert-Schmidt norm of `√R_0 q √R_0`.
pub fn contraction_estimate(q: &Field, kappa: f64) -> f64 {
    hm1k(q, kappa) / kappa.sqrt()
}

pub fn green_diagonal_series(q: &Field, kappa: f64, max_order: usize, cfg: &GreenConfig) -> Result<GreenReport> {
    check_kappa("kappa", kappa)?;
    if max_order == 0 {
        return Err(Error::InvalidParameter {
            name: "max_order",
            reason: "at least one series term is required".into(),
        });
    }
    let eps = contraction_estimate(q, kappa);
    if eps >= cfg.series_guard {
        return Err(Error::SeriesDivergent {
            estimate: eps,
            guard: cfg.series_guard,
        });
    }
    let mut rec = series::Recursion::new(q, kappa);
    let h1 = rec.term(1).clone();
    let mut nonlinear = crate::spectral::Field::zeros(*q.grid());
    let mut used = 1;
    for ell in 2..=max_order {
        let h = rec.term(ell);
        let size = h.max_abs();
        nonlinear = &nonlinear + h;
        used = ell;
        if size <= 1e-3 * f64::EPSILON * nonlinear.max_abs() {
            break;
        }
    }
    let tail = eps.powi(used as i32 + 1) / ((1.0 - eps) * kappa);
    let excess = &h1 + &nonlinear;
    Ok(GreenReport::assemble(q, kappa, excess, nonlinear, used, tail))
}

pub fn green_diagonal_direct(q: &Field, kappa: f64, cfg: &GreenConfig) -> Result<GreenReport> {
    check_kappa("kappa", kappa)?;
    let (excess, nonlinear) = dense::excess_dense(q, kappa, cfg.oversample, cfg.dense_limit)?;
    Ok(GreenReport::assemble(q, kappa, excess, nonlinear, 0, 0.0))
}

pub fn green_diagonal(q: &Field, kappa: f64, route: GreenRoute, cfg: &GreenConfig) -> Result<GreenReport> {
    match route {
        GreenRoute::Direct => green_diagonal_direct(q, kappa, cfg),
        GreenRoute::Series { max_order } => green_diagonal_series(q, kappa, max_order, cfg),
    }
}

/// `α(ϰ; q) = (1/2ϰ) ∫ ρ`, default route and guards.
pub fn alpha_of(q: &Field, kappa: f64) -> Result<f64> {
    alpha_with(q, kappa, GreenRoute::default(), &GreenConfig::default())
}

pub fn alpha_with(q: &Field, kappa: f64, route: GreenRoute, cfg: &GreenConfig) -> Result<f64> {
    Ok(green_diagonal(q, kappa, route, cfg)?.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::random_band_limited;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn vacuum() {
        let g = Grid::new(20.0, 64).unwrap();
        let q = Field::zeros(g);
        let cfg = GreenConfig::default();
        for route in [GreenRoute::Direct, GreenRoute::default()] {
            let r = green_diagonal(&q, 2.0, route, &cfg).unwrap();
            assert!(r.g.samples().iter().all(|&v| (v - 0.25).abs() < 1e-15));
            assert_eq!(r.rho.max_abs(), 0.0);
            assert_eq!(r.alpha, 0.0);
        }
    }

    #[test]
    fn single_mode_first_order() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q = Field::from_fn(g, |x| (3.0 * x).cos());
        let r = green_diagonal_series(&q, 2.0, 1, &GreenConfig::default()).unwrap();
        let expect = Field::from_fn(g, |x| 0.25 - (3.0 * x).cos() / 50.0);
        assert!(r.g.max_abs_diff(&expect) < 1e-15);
        assert_eq!(r.series_terms_used, 1);
    }

    #[test]
    fn constant_potential_shifts_kappa() {
        let g = Grid::new(40.0, 128).unwrap();
        for c in [0.05, -0.1, 0.3] {
            let q = Field::constant(g, c);
            let r = green_diagonal_direct(&q, 1.0, &GreenConfig::default()).unwrap();
            let expect = 0.5 / (1.0f64 + c).sqrt();
            for &v in r.g.samples() {
                assert!((v - expect).abs() < 1e-8, "{v} vs {expect}");
            }
        }
    }

    #[test]
    fn series_guard_refuses_large_data() {
        let g = Grid::new(20.0, 64).unwrap();
        let q = random_band_limited(g, 3.0, 1, 16).unwrap();
        assert!(matches!(
            green_diagonal_series(&q, 1.0, 6, &GreenConfig::default()),
            Err(Error::SeriesDivergent { .. })
        ));
    }

    #[test]
    fn alpha_quadratic_part() {
        // α = (1/2ϰ) ‖q‖²_{H^{-1}_ϰ} + O(q³)
        let g = Grid::new(40.0, 128).unwrap();
        let base = random_band_limited(g, 1.0, 9, 24).unwrap();
        let kappa = 2.0;
        let mut errs = Vec::new();
        for eps in [1e-3, 1e-4] {
            let q = base.scale(eps);
            let a = alpha_of(&q, kappa).unwrap();
            let quad = hm1k(&q, kappa).powi(2) / (2.0 * kappa);
            errs.push((a - quad).abs() / quad);
        }
        // relative error is linear in the amplitude
        let ratio = errs[0] / errs[1];
        assert!((ratio - 10.0).abs() < 0.5, "{errs:?}");
    }

    #[test]
    fn translation_equivariance() {
        let g = Grid::new(30.0, 64).unwrap();
        let q = random_band_limited(g, 0.2, 4, 16).unwrap();
        let r = green_diagonal_series(&q, 1.5, 8, &GreenConfig::default()).unwrap();
        let rs = green_diagonal_series(&q.shifted(5), 1.5, 8, &GreenConfig::default()).unwrap();
        assert!(rs.g.max_abs_diff(&r.g.shifted(5)) < 1e-15);
        assert!((rs.alpha - r.alpha).abs() < 1e-15);
    }
}
