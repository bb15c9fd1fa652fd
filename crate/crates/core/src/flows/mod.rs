//! Vector fields of the commuting flows and a fixed-step integrating-factor
//! RK4 integrator.
//!
//! Every flow is written as `q_t = L q + N(q)` with `L` a Fourier multiplier
//! (integrated exactly) and `N` the remainder.

mod integrator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use integrator::{integrate, lipschitz_estimate, IntegratorConfig, Scheme, TrajectoryRecord};

use crate::error::{check_kappa, Result};
use crate::schrodinger::{green_diagonal, GreenConfig, GreenRoute};
use crate::spectral::{ops, product_unchecked, triple_product, Field, NyquistRule, Symbol};

/// Which Hamiltonian generates the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FlowKind {
    /// `q_t = q⁽⁵⁾ − 20 q'q'' − 10 q q''' + 30 q² q'`.
    Fifth,
    /// `q_t = −q''' + 6 q q'`.
    Kdv,
    /// `q_t = q'`.
    Translation,
    /// Flow of `H_κ = 64κ⁷α(κ) − 16κ⁴P + 4κ²H_KdV`.
    HKappa { kappa: f64 },
    /// Flow of `H_5th − H_κ`.
    Difference { kappa: f64 },
}

impl FlowKind {
    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Fifth => "fifth",
            FlowKind::Kdv => "kdv",
            FlowKind::Translation => "translation",
            FlowKind::HKappa { .. } => "h_kappa",
            FlowKind::Difference { .. } => "difference",
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            FlowKind::HKappa { kappa } | FlowKind::Difference { kappa } => Some(kappa),
            _ => None,
        }
    }
}

/// A flow together with the Green's-function settings it needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub kind: FlowKind,
    #[serde(default)]
    pub green_route: GreenRoute,
    #[serde(default)]
    pub green: GreenConfig,
}

impl FlowSpec {
    pub fn new(kind: FlowKind) -> Self {
        Self {
            kind,
            green_route: GreenRoute::default(),
            green: GreenConfig::default(),
        }
    }

    pub fn with_route(mut self, route: GreenRoute) -> Self {
        self.green_route = route;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.kind.kappa() {
            check_kappa("kappa", k)?;
        }
        if let GreenRoute::Series { max_order: 0 } = self.green_route {
            return Err(crate::Error::InvalidParameter {
                name: "max_order",
                reason: "at least one series term is required".into(),
            });
        }
        Ok(())
    }

    /// Multiplier removed exactly by the integrating factor.
    pub fn linear_symbol(&self) -> Symbol {
        match self.kind {
            FlowKind::Fifth => Symbol::derivative(5),
            FlowKind::Kdv => Symbol::new("i xi^3", NyquistRule::Zero, |xi| Complex64::new(0.0, xi.powi(3))),
            FlowKind::Translation => Symbol::derivative(1),
            FlowKind::HKappa { kappa } => {
                let k4 = 4.0 * kappa * kappa;
                Symbol::new(
                    format!("4i k^2 xi^5/(xi^2+4k^2), k={kappa}"),
                    NyquistRule::Zero,
                    move |xi| Complex64::new(0.0, k4 * xi.powi(5) / (xi * xi + k4)),
                )
            }
            FlowKind::Difference { kappa } => {
                let k4 = 4.0 * kappa * kappa;
                Symbol::new(format!("i xi^7/(xi^2+4k^2), k={kappa}"), NyquistRule::Zero, move |xi| {
                    Complex64::new(0.0, xi.powi(7) / (xi * xi + k4))
                })
            }
        }
    }

    /// `N(q)`, the part of the vector field not in [`Self::linear_symbol`].
    pub fn nonlinear(&self, q: &Field) -> Result<Field> {
        match self.kind {
            FlowKind::Fifth => Ok(nonlinear_fifth(q)),
            FlowKind::Kdv => Ok(nonlinear_kdv(q)),
            FlowKind::Translation => Ok(Field::zeros(*q.grid())),
            FlowKind::HKappa { kappa } => nonlinear_hkappa(q, kappa, self.green_route, &self.green),
            FlowKind::Difference { kappa } => {
                let a = nonlinear_fifth(q);
                let b = nonlinear_hkappa(q, kappa, self.green_route, &self.green)?;
                Ok(&a - &b)
            }
        }
    }

    /// Full vector field `L q + N(q)`.
    pub fn rhs(&self, q: &Field) -> Result<Field> {
        let lin = crate::spectral::apply_multiplier_complex(&self.linear_symbol(), q).to_field();
        Ok(&lin + &self.nonlinear(q)?)
    }
}

/// `∂_x(−10 q q'' − 5 q'² + 10 q³)`.
fn nonlinear_fifth(q: &Field) -> Field {
    let d1 = ops::derivative(q, 1);
    let d2 = ops::derivative(q, 2);
    let a = product_unchecked(q, &d2);
    let b = product_unchecked(&d1, &d1);
    let c = triple_product(q, q, q);
    let n = q.grid().points();
    let inner: Vec<f64> = (0..n)
        .map(|j| -10.0 * a.samples()[j] - 5.0 * b.samples()[j] + 10.0 * c.samples()[j])
        .collect();
    ops::derivative(&Field::from_samples_unchecked(*q.grid(), inner), 1)
}

/// `∂_x(3 q²)`.
fn nonlinear_kdv(q: &Field) -> Field {
    ops::derivative(&product_unchecked(q, q).scale(3.0), 1)
}

/// `∂_x(−64κ⁷ [g − 1/(2κ) − h_1] + 12κ² q²)`.
fn nonlinear_hkappa(q: &Field, kappa: f64, route: GreenRoute, cfg: &GreenConfig) -> Result<Field> {
    let report = green_diagonal(q, kappa, route, cfg)?;
    let sq = product_unchecked(q, q);
    let c7 = 64.0 * kappa.powi(7);
    let c2 = 12.0 * kappa * kappa;
    let inner = report.excess_nonlinear.zip_with(&sq, |d, s| -c7 * d + c2 * s);
    Ok(ops::derivative(&inner, 1))
}

/// `q⁽⁵⁾ − 20 q'q'' − 10 q q''' + 30 q² q'`, term by term.
pub fn rhs_fifth(q: &Field) -> Field {
    let d1 = ops::derivative(q, 1);
    let d2 = ops::derivative(q, 2);
    let d3 = ops::derivative(q, 3);
    let d5 = ops::derivative(q, 5);
    let a = product_unchecked(&d1, &d2);
    let b = product_unchecked(q, &d3);
    let c = triple_product(q, q, &d1);
    let n = q.grid().points();
    let s = (0..n)
        .map(|j| d5.samples()[j] - 20.0 * a.samples()[j] - 10.0 * b.samples()[j] + 30.0 * c.samples()[j])
        .collect();
    Field::from_samples_unchecked(*q.grid(), s)
}

/// `∂_x(q⁗ − 10 q q'' − 5 q'² + 10 q³)`.
pub fn rhs_fifth_conservative(q: &Field) -> Field {
    let lin = ops::derivative(q, 5);
    &lin + &nonlinear_fifth(q)
}

/// `−q''' + 6 q q'`.
pub fn rhs_kdv(q: &Field) -> Field {
    FlowSpec::new(FlowKind::Kdv).rhs(q).expect("kdv vector field is total")
}

/// `{−64κ⁷ g(κ) + 32κ⁶ − 16κ⁴ q + 4κ²[−q'' + 3q²]}'`.
///
/// The constant is absorbed exactly: `32κ⁶ − 64κ⁷ g = −64κ⁷ (g − 1/(2κ))`,
/// and the part linear in `q` is the multiplier `4κ²ξ⁴/(ξ² + 4κ²)`.
pub fn rhs_hkappa(q: &Field, kappa: f64, route: GreenRoute) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    FlowSpec::new(FlowKind::HKappa { kappa }).with_route(route).rhs(q)
}

/// `rhs_fifth − rhs_hkappa`.
pub fn rhs_difference(q: &Field, kappa: f64, route: GreenRoute) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    FlowSpec::new(FlowKind::Difference { kappa }).with_route(route).rhs(q)
}

/// The `H_κ` bracket evaluated verbatim from `g`, with the constant
/// subtracted numerically; used to cross-check [`rhs_hkappa`].
pub fn rhs_hkappa_verbatim(q: &Field, kappa: f64, route: GreenRoute) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    let report = green_diagonal(q, kappa, route, &GreenConfig::default())?;
    let d2 = ops::derivative(q, 2);
    let sq = product_unchecked(q, q);
    let n = q.grid().points();
    let (k2, k4, k6, k7) = (kappa.powi(2), kappa.powi(4), kappa.powi(6), kappa.powi(7));
    let s = (0..n)
        .map(|j| {
            -64.0 * k7 * report.g.samples()[j] + 32.0 * k6 - 16.0 * k4 * q.samples()[j]
                + 4.0 * k2 * (-d2.samples()[j] + 3.0 * sq.samples()[j])
        })
        .collect();
    Ok(ops::derivative(&Field::from_samples_unchecked(*q.grid(), s), 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::grad_h5th;
    use crate::initial::random_band_limited;
    use crate::spectral::{h_minus1_norm, Grid};
    use std::f64::consts::PI;

    #[test]
    fn vacuum_is_stationary() {
        let g = Grid::new(30.0, 64).unwrap();
        let z = Field::zeros(g);
        assert_eq!(rhs_fifth(&z).max_abs(), 0.0);
        assert_eq!(rhs_hkappa(&z, 3.0, GreenRoute::default()).unwrap().max_abs(), 0.0);
        assert_eq!(rhs_hkappa(&z, 3.0, GreenRoute::Direct).unwrap().max_abs(), 0.0);
        assert_eq!(rhs_difference(&z, 3.0, GreenRoute::default()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn fifth_on_cosine() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let q = Field::from_fn(g, f64::cos);
        let out = rhs_fifth(&q);
        // q⁽⁵⁾ = −sin x; −20 q'q'' = −10 sin 2x; −10 q q''' = −5 sin 2x;
        // 30 q² q' = −30 cos²x sin x
        let expect = Field::from_fn(g, |x| {
            -x.sin() - 10.0 * (2.0 * x).sin() - 5.0 * (2.0 * x).sin() - 30.0 * x.cos().powi(2) * x.sin()
        });
        // ξ⁵ amplifies rounding at the top of the band
        assert!(out.max_abs_diff(&expect) < 1e-8);
    }

    #[test]
    fn fifth_forms_agree_and_match_gradient() {
        let g = Grid::new(40.0, 256).unwrap();
        let q = random_band_limited(g, 0.2, 21, 64).unwrap();
        let a = rhs_fifth(&q);
        let b = rhs_fifth_conservative(&q);
        assert!(a.max_abs_diff(&b) < 1e-9 * a.max_abs());
        let c = ops::derivative(&grad_h5th(&q), 1);
        assert!(b.max_abs_diff(&c) < 1e-10 * b.max_abs());
        assert!(a.integral().abs() < 1e-12 * a.max_abs());
    }

    #[test]
    fn hkappa_cancellation_free_form_matches_verbatim() {
        let g = Grid::new(40.0, 256).unwrap();
        let q = random_band_limited(g, 0.1, 5, 48).unwrap();
        for kappa in [1.0, 2.0, 4.0] {
            let a = rhs_hkappa(&q, kappa, GreenRoute::default()).unwrap();
            let b = rhs_hkappa_verbatim(&q, kappa, GreenRoute::default()).unwrap();
            // the verbatim form loses ~64κ⁶·ε digits to cancellation
            let tol = 64.0 * kappa.powi(6) * 1e-14;
            assert!(a.max_abs_diff(&b) < tol, "kappa {kappa}: {:e}", a.max_abs_diff(&b));
            assert!(a.integral().abs() < 1e-12 * a.max_abs());
        }
    }

    #[test]
    fn hkappa_linearization_symbol() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let (k, kappa) = (3.0f64, 2.0);
        let lin = 4.0 * kappa * kappa * k.powi(4) / (k * k + 4.0 * kappa * kappa) * k;
        let mut errs = Vec::new();
        for eps in [1e-3, 5e-4] {
            let q = Field::from_fn(g, |x| eps * (k * x).cos());
            let out = rhs_hkappa(&q, kappa, GreenRoute::default()).unwrap();
            // ∂_x of m·cos(kx) is −k·m·sin(kx)
            let expect = Field::from_fn(g, |x| -eps * lin * (k * x).sin());
            errs.push(out.max_abs_diff(&expect) / eps);
        }
        // relative deviation from the linear symbol is first order in ε
        assert!((errs[0] / errs[1] - 2.0).abs() < 0.05, "{errs:?}");
    }

    #[test]
    fn difference_symbol_identity() {
        let g = Grid::new(10.0, 64).unwrap();
        let kappa = 3.0;
        let l5 = FlowSpec::new(FlowKind::Fifth).linear_symbol().lattice_values(&g);
        let lk = FlowSpec::new(FlowKind::HKappa { kappa })
            .linear_symbol()
            .lattice_values(&g);
        let ld = FlowSpec::new(FlowKind::Difference { kappa })
            .linear_symbol()
            .lattice_values(&g);
        for k in 0..64 {
            let d = l5[k] - lk[k];
            assert!((d - ld[k]).norm() <= 1e-12 * ld[k].norm().max(1.0));
        }
    }

    #[test]
    fn difference_decays_in_kappa() {
        let g = Grid::new(40.0, 256).unwrap();
        let q = crate::initial::gaussian(g, 0.05, 1.0, 0.0);
        let mut last = f64::INFINITY;
        for kappa in [4.0, 8.0, 16.0, 32.0] {
            let d = h_minus1_norm(&rhs_difference(&q, kappa, GreenRoute::default()).unwrap());
            assert!(d < last, "kappa {kappa}: {d:e}");
            last = d;
        }
    }

    #[test]
    fn kdv_symbol_matches_third_derivative() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q = Field::from_fn(g, |x| 1e-8 * (2.0 * x).sin());
        let out = rhs_kdv(&q);
        // −q''' = −(−8 · 1e-8 cos 2x)
        let expect = Field::from_fn(g, |x| 8e-8 * (2.0 * x).cos());
        assert!(out.max_abs_diff(&expect) < 1e-15);
    }
}
