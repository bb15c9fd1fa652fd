use rayon::prelude::*;

use crate::error::{check_kappa, Error, Result};
use crate::flows::{FlowKind, TrajectoryRecord};
use crate::schrodinger::{green_diagonal, GreenConfig, GreenReport, GreenRoute};
use crate::spectral::{ops, product_unchecked, sobolev_norm, triple_product, Field};

/// Smallest `|κ² − ϰ²|` accepted by [`current_jkappa`].
pub const POLE_GAP: f64 = 1.0;

/// `16ϰ⁵(g − 1/(2ϰ)) + 4ϰ² q + q''`, assembled as `16ϰ⁵ Δ≥2 + ϰ h_1⁗` so
/// that the large linear parts never meet.
fn linear_bracket(q: &Field, report: &GreenReport) -> Field {
    let k = report.kappa;
    let k4 = 4.0 * k * k;
    let h1_4 = ops::even_multiplier(q, move |xi| -xi.powi(4) / (xi * xi + k4));
    let c = 16.0 * k.powi(5);
    report.excess_nonlinear.zip_with(&h1_4, |d, h| c * d + h)
}

/// `2ϰ − 1/g(ϰ) = 4ϰ²Δ/(1 + 2ϰΔ)`.
fn reciprocal_deficit(report: &GreenReport) -> Field {
    report.diffeo_image()
}

/// Current of `ρ(ϰ)` under the fifth-order flow:
///
/// ```text
/// j = −(2ϰ/g)[16ϰ⁵g − 8ϰ⁴ + 4ϰ²q + q'' − 3q²]
///     − 4ϰ² R_0(2ϰ)[q⁗ − 5(q²)'' + 5q'² + 10q³]
/// ```
pub fn current_j5th(q: &Field, varkappa: f64) -> Result<Field> {
    current_j5th_with(q, varkappa, GreenRoute::default(), &GreenConfig::default())
}

pub fn current_j5th_with(q: &Field, varkappa: f64, route: GreenRoute, cfg: &GreenConfig) -> Result<Field> {
    let report = green_diagonal(q, varkappa, route, cfg)?;
    Ok(j5th_from(q, &report))
}

fn j5th_from(q: &Field, report: &GreenReport) -> Field {
    let k = report.kappa;
    let k2 = k * k;
    let sq = product_unchecked(q, q);
    let bracket = linear_bracket(q, report).zip_with(&sq, |b, s| b - 3.0 * s);
    // 2ϰ/g = 4ϰ²/(1 + 2ϰΔ)
    let first = bracket.zip_with(&report.excess, |b, d| -4.0 * k2 * b / (1.0 + 2.0 * k * d));

    let d1 = ops::derivative(q, 1);
    let d4 = ops::derivative(q, 4);
    let sq2 = ops::derivative(&sq, 2);
    let d1sq = product_unchecked(&d1, &d1);
    let cube = triple_product(q, q, q);
    let n = q.grid().points();
    let inner = Field::from_samples_unchecked(
        *q.grid(),
        (0..n)
            .map(|j| d4.samples()[j] - 5.0 * sq2.samples()[j] + 5.0 * d1sq.samples()[j] + 10.0 * cube.samples()[j])
            .collect(),
    );
    let second = ops::resolvent(&inner, 2.0 * k).scale(-4.0 * k2);
    &first + &second
}

fn check_pole(varkappa: f64, kappa: f64) -> Result<()> {
    let gap = (kappa * kappa - varkappa * varkappa).abs();
    if gap < POLE_GAP {
        return Err(Error::PoleProximity {
            gap,
            required: POLE_GAP,
        });
    }
    Ok(())
}

/// Current of `ρ(ϰ)` under the `H_κ` flow:
///
/// ```text
/// j = 32κ⁷ϰ/(κ²−ϰ²) · g(κ)/g(ϰ) − 8κ²ϰ (2κ² + 2ϰ² − q)/g(ϰ) − 32κ²ϰ⁶/(κ²−ϰ²)
///     − 16κ²ϰ² R_0(2ϰ)[−16κ⁵g(κ) + 8κ⁴ − 4κ²q − q'' + 3q²]
/// ```
///
/// The three constant groups cancel identically; they are removed
/// algebraically by writing `g(κ) = 1/(2κ) + Δ_κ` and `1/g(ϰ) = 2ϰ − E_ϰ`.
pub fn current_jkappa(q: &Field, varkappa: f64, kappa: f64) -> Result<Field> {
    current_jkappa_with(q, varkappa, kappa, GreenRoute::default(), &GreenConfig::default())
}

pub fn current_jkappa_with(
    q: &Field,
    varkappa: f64,
    kappa: f64,
    route: GreenRoute,
    cfg: &GreenConfig,
) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    check_kappa("varkappa", varkappa)?;
    check_pole(varkappa, kappa)?;
    let rv = green_diagonal(q, varkappa, route, cfg)?;
    let rk = green_diagonal(q, kappa, route, cfg)?;
    Ok(jkappa_from(q, &rv, &rk))
}

fn jkappa_from(q: &Field, rv: &GreenReport, rk: &GreenReport) -> Field {
    let (v, k) = (rv.kappa, rk.kappa);
    let (v2, k2) = (v * v, k * k);
    let c = 32.0 * k.powi(7) * v / (k2 - v2);
    let e = reciprocal_deficit(rv);
    let sq = product_unchecked(q, q);
    let n = q.grid().points();
    let (dk, ev, qs) = (rk.excess.samples(), e.samples(), q.samples());
    let top = Field::from_samples_unchecked(
        *q.grid(),
        (0..n)
            .map(|j| {
                c * (2.0 * v * dk[j] - ev[j] / (2.0 * k) - dk[j] * ev[j])
                    + 16.0 * k2 * v * (k2 + v2) * ev[j]
                    + 8.0 * k2 * v * qs[j] * (2.0 * v - ev[j])
            })
            .collect(),
    );
    // −16κ⁵Δ_κ − 4κ²q − q'' + 3q² = −(16κ⁵Δ_κ≥2 + κ h_1(κ)⁗) + 3q²
    let bracket = linear_bracket(q, rk).zip_with(&sq, |b, s| -b + 3.0 * s);
    let bottom = ops::resolvent(&bracket, 2.0 * v).scale(-16.0 * k2 * v2);
    &top + &bottom
}

/// [`current_jkappa`] evaluated term by term from `g(κ)` and `g(ϰ)`, constants
/// included; for cross-checking only.
pub fn current_jkappa_verbatim(q: &Field, varkappa: f64, kappa: f64) -> Result<Field> {
    check_kappa("kappa", kappa)?;
    check_kappa("varkappa", varkappa)?;
    check_pole(varkappa, kappa)?;
    let cfg = GreenConfig::default();
    let rv = green_diagonal(q, varkappa, GreenRoute::default(), &cfg)?;
    let rk = green_diagonal(q, kappa, GreenRoute::default(), &cfg)?;
    let (v, k) = (varkappa, kappa);
    let (v2, k2) = (v * v, k * k);
    let d2 = ops::derivative(q, 2);
    let sq = product_unchecked(q, q);
    let n = q.grid().points();
    let (gv, gk, qs) = (rv.g.samples(), rk.g.samples(), q.samples());
    let bracket = Field::from_samples_unchecked(
        *q.grid(),
        (0..n)
            .map(|j| {
                -16.0 * k.powi(5) * gk[j] + 8.0 * k.powi(4) - 4.0 * k2 * qs[j] - d2.samples()[j] + 3.0 * sq.samples()[j]
            })
            .collect(),
    );
    let bottom = ops::resolvent(&bracket, 2.0 * v);
    let s = (0..n)
        .map(|j| {
            32.0 * k.powi(7) * v / (k2 - v2) * gk[j] / gv[j]
                - 8.0 * k2 * v * (2.0 * k2 + 2.0 * v2 - qs[j]) / gv[j]
                - 32.0 * k2 * v.powi(6) / (k2 - v2)
                - 16.0 * k2 * v2 * bottom.samples()[j]
        })
        .collect();
    Ok(Field::from_samples_unchecked(*q.grid(), s))
}

/// `max_t ‖(ρ(t+) − ρ(t−))/(t+ − t−) + ∂_x j(t)‖_{H^{-2}_ϰ}` over interior
/// snapshots with `t ∈ window`, using the trajectory's own Green's settings.
pub fn microscopic_residual(traj: &TrajectoryRecord, varkappa: f64, window: (f64, f64)) -> Result<f64> {
    microscopic_residual_with(traj, varkappa, window, traj.flow.green_route, &traj.flow.green)
}

pub fn microscopic_residual_with(
    traj: &TrajectoryRecord,
    varkappa: f64,
    window: (f64, f64),
    route: GreenRoute,
    cfg: &GreenConfig,
) -> Result<f64> {
    check_kappa("varkappa", varkappa)?;
    let flow_kappa = match traj.flow.kind {
        FlowKind::Fifth => None,
        FlowKind::HKappa { kappa } | FlowKind::Difference { kappa } => {
            check_pole(varkappa, kappa)?;
            Some(kappa)
        }
        FlowKind::Kdv | FlowKind::Translation => {
            return Err(Error::Unsupported(format!(
                "no microscopic current for the {} flow",
                traj.flow.kind.name()
            )))
        }
    };
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "trajectory",
            reason: "at least three snapshots are needed for centered differences".into(),
        });
    }
    let (start, end) = (snaps[0].0, snaps[snaps.len() - 1].0);
    if window.0 < start || window.1 > end || window.0 > window.1 {
        return Err(Error::WindowNotCovered {
            t0: window.0,
            t1: window.1,
            start,
            end,
        });
    }
    let reports: Vec<GreenReport> = snaps
        .par_iter()
        .map(|(_, q)| green_diagonal(q, varkappa, route, cfg))
        .collect::<Result<_>>()?;
    let residuals: Vec<f64> = (1..snaps.len() - 1)
        .into_par_iter()
        .filter(|&i| snaps[i].0 >= window.0 && snaps[i].0 <= window.1)
        .map(|i| {
            let q = &snaps[i].1;
            let j5 = || j5th_from(q, &reports[i]);
            let jk = |kappa: f64| -> Result<Field> {
                let rk = green_diagonal(q, kappa, route, cfg)?;
                Ok(jkappa_from(q, &reports[i], &rk))
            };
            let j = match (traj.flow.kind, flow_kappa) {
                (FlowKind::HKappa { .. }, Some(k)) => jk(k)?,
                (FlowKind::Difference { .. }, Some(k)) => &j5() - &jk(k)?,
                _ => j5(),
            };
            let dt = snaps[i + 1].0 - snaps[i - 1].0;
            let rho_t = (&reports[i + 1].rho - &reports[i - 1].rho).scale(1.0 / dt);
            let r = &rho_t + &ops::derivative(&j, 1);
            sobolev_norm(&r, -2.0, varkappa)
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{gaussian, random_band_limited};
    use crate::spectral::Grid;

    #[test]
    fn currents_vanish_on_vacuum() {
        let g = Grid::new(30.0, 64).unwrap();
        let z = Field::zeros(g);
        assert_eq!(current_j5th(&z, 2.0).unwrap().max_abs(), 0.0);
        assert_eq!(current_jkappa(&z, 2.0, 8.0).unwrap().max_abs(), 0.0);
        // verbatim constants cancel up to rounding
        let v = current_jkappa_verbatim(&z, 2.0, 8.0).unwrap();
        assert!(v.max_abs() < 1e-9 * 32.0 * 8f64.powi(6) * 4.0);
    }

    #[test]
    fn jkappa_forms_agree() {
        let g = Grid::new(40.0, 128).unwrap();
        let q = random_band_limited(g, 0.1, 17, 32).unwrap();
        for (v, k) in [(1.0, 3.0), (2.0, 8.0), (4.0, 2.0)] {
            let a = current_jkappa(&q, v, k).unwrap();
            let b = current_jkappa_verbatim(&q, v, k).unwrap();
            // largest of the constants that cancel
            let scale = (32.0 * k.powi(6) * v * v / (k * k - v * v))
                .abs()
                .max(32.0 * k * k * v * v * (k * k + v * v));
            assert!(a.max_abs_diff(&b) < 1e-12 * scale, "{v} {k}: {:e}", a.max_abs_diff(&b));
        }
    }

    #[test]
    fn pole_is_refused() {
        let g = Grid::new(30.0, 64).unwrap();
        let q = gaussian(g, 0.01, 1.0, 0.0);
        assert!(matches!(current_jkappa(&q, 2.0, 2.1), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn currents_are_translation_covariant() {
        let g = Grid::new(30.0, 128).unwrap();
        let q = random_band_limited(g, 0.1, 3, 32).unwrap();
        let a = current_j5th(&q.shifted(9), 2.0).unwrap();
        let b = current_j5th(&q, 2.0).unwrap().shifted(9);
        assert!(a.max_abs_diff(&b) < 1e-12 * b.max_abs());
        let a = current_jkappa(&q.shifted(9), 2.0, 5.0).unwrap();
        let b = current_jkappa(&q, 2.0, 5.0).unwrap().shifted(9);
        assert!(a.max_abs_diff(&b) < 1e-12 * b.max_abs());
    }

    #[test]
    fn instantaneous_balance() {
        // ∂_t ρ = ⟨δρ/δq, q_t⟩ by finite differences along the vector field
        let g = Grid::new(40.0, 256).unwrap();
        let q = gaussian(g, 0.05, 1.0, 0.0);
        let cfg = GreenConfig::default();
        let route = GreenRoute::default();
        for kind in [FlowKind::Fifth, FlowKind::HKappa { kappa: 8.0 }] {
            let spec = crate::flows::FlowSpec::new(kind);
            let v = spec.rhs(&q).unwrap();
            let varkappa = 2.0;
            let eps = 1e-4;
            let rp = green_diagonal(&q.axpy(eps, &v), varkappa, route, &cfg).unwrap();
            let rm = green_diagonal(&q.axpy(-eps, &v), varkappa, route, &cfg).unwrap();
            let rho_t = (&rp.rho - &rm.rho).scale(0.5 / eps);
            let j = match kind {
                FlowKind::Fifth => current_j5th(&q, varkappa).unwrap(),
                _ => current_jkappa(&q, varkappa, 8.0).unwrap(),
            };
            let r = &rho_t + &ops::derivative(&j, 1);
            let scale = sobolev_norm(&rho_t, -2.0, varkappa).unwrap();
            let res = sobolev_norm(&r, -2.0, varkappa).unwrap();
            assert!(res < 1e-6 * scale, "{kind:?}: {res:e} vs {scale:e}");
        }
    }

    #[test]
    fn kdv_and_translation_are_refused() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let q0 = Field::from_fn(g, f64::cos).scale(0.01);
        let cfg = crate::flows::IntegratorConfig::new(0.01, 0.03);
        for kind in [FlowKind::Kdv, FlowKind::Translation] {
            let rec = crate::flows::integrate(&q0, &crate::flows::FlowSpec::new(kind), &cfg).unwrap();
            assert!(matches!(
                microscopic_residual(&rec, 2.0, (0.0, 0.03)),
                Err(Error::Unsupported(_))
            ));
        }
    }
}
