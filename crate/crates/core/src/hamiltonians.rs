//! Polynomial conserved functionals, their gradients, and `H_κ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_kappa, Error, Result};
use crate::schrodinger::{green_diagonal, GreenConfig, GreenReport, GreenRoute};
use crate::spectral::{ops, product_unchecked, triple_product, Field};

/// Values of the conserved functionals at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    pub t: f64,
    /// `∫ q`.
    pub mass: f64,
    /// `P = ∫ q²/2`.
    pub momentum: f64,
    /// `∫ q'²/2 + q³`.
    pub h_kdv: f64,
    /// `∫ q''²/2 + 5 q q'² + 5q⁴/2`.
    pub h_5th: f64,
    /// `(ϰ, α(ϰ; q))`, `ϰ` strictly increasing.
    pub alpha_samples: Vec<(f64, f64)>,
}

impl ConservedReport {
    /// `(name, kappa, value)` rows; `kappa` is `None` for the polynomial
    /// functionals.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>, f64)> {
        let mut rows = vec![
            ("M", None, self.mass),
            ("P", None, self.momentum),
            ("H_KdV", None, self.h_kdv),
            ("H_5th", None, self.h_5th),
        ];
        rows.extend(self.alpha_samples.iter().map(|&(k, a)| ("alpha", Some(k), a)));
        rows
    }
}

pub fn mass(q: &Field) -> f64 {
    q.integral()
}

pub fn momentum(q: &Field) -> f64 {
    0.5 * q.inner(q)
}

pub fn h_kdv(q: &Field) -> f64 {
    let d1 = ops::derivative(q, 1);
    let dx = q.grid().dx();
    q.samples()
        .iter()
        .zip(d1.samples())
        .map(|(&u, &a)| 0.5 * a * a + u * u * u)
        .sum::<f64>()
        * dx
}

pub fn h_5th(q: &Field) -> f64 {
    let d1 = ops::derivative(q, 1);
    let d2 = ops::derivative(q, 2);
    let dx = q.grid().dx();
    q.samples()
        .iter()
        .zip(d1.samples())
        .zip(d2.samples())
        .map(|((&u, &a), &b)| 0.5 * b * b + 5.0 * u * a * a + 2.5 * u.powi(4))
        .sum::<f64>()
        * dx
}

pub(crate) fn check_kappa_list(kappas: &[f64]) -> Result<()> {
    for &k in kappas {
        check_kappa("kappa_list", k)?;
    }
    if kappas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "kappa_list",
            reason: "values must be strictly increasing".into(),
        });
    }
    Ok(())
}

pub fn conserved_report(q: &Field, kappas: &[f64]) -> Result<ConservedReport> {
    conserved_report_with(q, kappas, 0.0, GreenRoute::default(), &GreenConfig::default())
}

pub fn conserved_report_with(
    q: &Field,
    kappas: &[f64],
    t: f64,
    route: GreenRoute,
    cfg: &GreenConfig,
) -> Result<ConservedReport> {
    if let Some(index) = q.samples().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    check_kappa_list(kappas)?;
    let alpha_samples = kappas
        .iter()
        .map(|&k| Ok((k, green_diagonal(q, k, route, cfg)?.alpha)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConservedReport {
        t,
        mass: mass(q),
        momentum: momentum(q),
        h_kdv: h_kdv(q),
        h_5th: h_5th(q),
        alpha_samples,
    })
}

/// `H_κ = 64κ⁷ α(κ) − 16κ⁴ P + 4κ² H_KdV`.
pub fn h_kappa_value(q: &Field, kappa: f64) -> Result<f64> {
    h_kappa_value_with(q, kappa, GreenRoute::default(), &GreenConfig::default())
}

pub fn h_kappa_value_with(q: &Field, kappa: f64, route: GreenRoute, cfg: &GreenConfig) -> Result<f64> {
    check_kappa("kappa", kappa)?;
    let report: GreenReport = green_diagonal(q, kappa, route, cfg)?;
    Ok(64.0 * kappa.powi(7) * report.alpha - 16.0 * kappa.powi(4) * momentum(q) + 4.0 * kappa * kappa * h_kdv(q))
}

/// `δP/δq = q`.
pub fn grad_p(q: &Field) -> Field {
    q.clone()
}

/// `δH_KdV/δq = −q'' + 3q²`.
pub fn grad_hkdv(q: &Field) -> Field {
    let d2 = ops::derivative(q, 2);
    let sq = product_unchecked(q, q);
    d2.zip_with(&sq, |a, b| -a + 3.0 * b)
}

/// `δH_5th/δq = q'''' − 10 q q'' − 5 q'² + 10 q³`.
pub fn grad_h5th(q: &Field) -> Field {
    let d1 = ops::derivative(q, 1);
    let d2 = ops::derivative(q, 2);
    let d4 = ops::derivative(q, 4);
    let qq2 = product_unchecked(q, &d2);
    let q1sq = product_unchecked(&d1, &d1);
    let cube = triple_product(q, q, q);
    let n = q.grid().points();
    let s = (0..n)
        .map(|j| d4.samples()[j] - 10.0 * qq2.samples()[j] - 5.0 * q1sq.samples()[j] + 10.0 * cube.samples()[j])
        .collect();
    Field::from_samples_unchecked(*q.grid(), s)
}
