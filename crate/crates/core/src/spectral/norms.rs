use super::Field;
use crate::error::{check_kappa, Result};

/// `( Σ (ξ_k² + 4ϰ²)^s |f̂_k|² (2π/L) )^{1/2}`.
pub fn sobolev_norm(f: &Field, s: f64, kappa: f64) -> Result<f64> {
    check_kappa("kappa", kappa)?;
    Ok(weighted_norm(f, s, 4.0 * kappa * kappa))
}

/// `( Σ (ξ_k² + shift)^s |f̂_k|² (2π/L) )^{1/2}` without parameter checks.
pub(crate) fn weighted_norm(f: &Field, s: f64, shift: f64) -> f64 {
    let g = f.grid();
    let c = f.spectrum();
    let sum: f64 = (0..g.points())
        .map(|k| {
            let xi = g.wavenumber(k);
            (xi * xi + shift).powf(s) * c[k].norm_sqr()
        })
        .sum();
    (sum * g.dxi()).sqrt()
}

/// Inhomogeneous `H^{-1}` norm with weight `1/(ξ² + 1)`.
pub fn h_minus1_norm(f: &Field) -> f64 {
    weighted_norm(f, -1.0, 1.0)
}

/// `‖f‖_{H^{-1}_ϰ}`; shorthand used throughout the Green's-function layer.
pub(crate) fn hm1k(f: &Field, kappa: f64) -> f64 {
    weighted_norm(f, -1.0, 4.0 * kappa * kappa)
}

/// `‖f‖_{H^1_ϰ}`.
pub(crate) fn h1k(f: &Field, kappa: f64) -> f64 {
    weighted_norm(f, 1.0, 4.0 * kappa * kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_has_zero_norm() {
        let g = Grid::new(5.0, 16).unwrap();
        assert_eq!(sobolev_norm(&Field::zeros(g), -1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_h_minus_one() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let f = Field::from_fn(g, |x| (3.0 * x).cos());
        let n = sobolev_norm(&f, -1.0, 1.0).unwrap();
        assert!((n - (PI / 13.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn small_kappa_is_refused() {
        let g = Grid::new(5.0, 16).unwrap();
        assert!(sobolev_norm(&Field::zeros(g), -1.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn parseval_for_every_kappa(
            samples in prop::collection::vec(-3.0f64..3.0, 64),
            kappa in 1.0f64..50.0,
        ) {
            let g = Grid::new(11.0, 64).unwrap();
            let f = Field::new(g, samples).unwrap();
            let n = sobolev_norm(&f, 0.0, kappa).unwrap();
            let l2 = f.l2_norm();
            prop_assert!((n - l2).abs() <= 1e-12 * l2.max(1e-300));
        }

        #[test]
        fn negative_order_is_monotone_in_kappa(
            samples in prop::collection::vec(-3.0f64..3.0, 32),
            k1 in 1.0f64..10.0,
            dk in 0.0f64..10.0,
        ) {
            let g = Grid::new(7.0, 32).unwrap();
            let f = Field::new(g, samples).unwrap();
            let a = sobolev_norm(&f, -1.0, k1).unwrap();
            let b = sobolev_norm(&f, -1.0, k1 + dk).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-14));
        }
    }
}
