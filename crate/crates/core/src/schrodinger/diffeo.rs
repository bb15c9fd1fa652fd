//! The map `q ↦ 2ϰ − 1/g(ϰ; q)` and its inverse near zero.

use super::{green_diagonal, GreenConfig, GreenRoute};
use crate::error::{check_kappa, Error, Result};
use crate::spectral::{h1k, ops, Field};

/// Outcome of an inversion.
#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub q: Field,
    pub iterations: usize,
    /// Final residual in `H^1_ϰ`.
    pub residual: f64,
}

const MAX_ITERATIONS: usize = 50;
const MAX_HALVINGS: usize = 20;

pub fn diffeo_forward(q: &Field, kappa: f64) -> Result<Field> {
    diffeo_forward_with(q, kappa, GreenRoute::default(), &GreenConfig::default())
}

pub fn diffeo_forward_with(q: &Field, kappa: f64, route: GreenRoute, cfg: &GreenConfig) -> Result<Field> {
    Ok(green_diagonal(q, kappa, route, cfg)?.diffeo_image())
}

/// Solves `diffeo_forward(q) = w` for `q`.
///
/// Uses the simplified Newton step with the derivative at `q = 0`,
/// `−4ϰ R_0(2ϰ)`, whose inverse is the multiplier `−(ξ² + 4ϰ²)/(4ϰ)`. A step
/// that increases the residual is halved.
pub fn diffeo_inverse(w: &Field, kappa: f64, tol: f64) -> Result<Field> {
    Ok(diffeo_inverse_with(w, kappa, tol, GreenRoute::default(), &GreenConfig::default())?.q)
}

pub fn diffeo_inverse_with(
    w: &Field,
    kappa: f64,
    tol: f64,
    route: GreenRoute,
    cfg: &GreenConfig,
) -> Result<NewtonReport> {
    check_kappa("kappa", kappa)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let k4 = 4.0 * kappa * kappa;
    let precondition = |r: &Field| ops::even_multiplier(r, |xi| -(xi * xi + k4) / (4.0 * kappa));
    let residual_of = |q: &Field| -> Result<(Field, f64)> {
        let r = &diffeo_forward_with(q, kappa, route, cfg)? - w;
        let n = h1k(&r, kappa);
        Ok((r, n))
    };

    let mut q = precondition(w);
    let (mut r, mut norm) = residual_of(&q)?;
    let mut iterations = 0;
    while norm > tol {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let step = precondition(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = q.axpy(-lambda, &step);
            match residual_of(&trial) {
                Ok((rt, nt)) if nt < norm => {
                    q = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
                Ok(_) | Err(Error::SeriesDivergent { .. }) | Err(Error::NearSingular { .. }) => {
                    lambda *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
    }
    Ok(NewtonReport {
        q,
        iterations,
        residual: norm,
    })
}
