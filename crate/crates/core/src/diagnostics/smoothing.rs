use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_kappa, Error, Result};
use crate::flows::TrajectoryRecord;
use crate::spectral::{ops, sobolev_norm, Field, Grid};

/// Time window of the local-smoothing norm.
pub const LS_WINDOW: (f64, f64) = (-1.0, 1.0);

/// Localizing weights `ψ_z(x) = sech(d_z(x)/99)`.
///
/// On a torus of length `L` the displacement `x − z` is replaced by the
/// smooth periodic chord `d_z(x) = (L/π) sin(π(x − z)/L)`, which agrees with
/// `x − z` to third order near the center and keeps `0 < ψ_z ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightFamily {
    pub center: f64,
}

impl WeightFamily {
    pub const SCALE: f64 = 99.0;
    pub const MAX_POWER: u32 = 12;

    pub fn new(center: f64) -> Self {
        Self { center }
    }

    pub fn psi(&self, grid: &Grid) -> Field {
        self.power(grid, 1).expect("power 1 is admissible")
    }

    /// `ψ_z^m` for `1 ≤ m ≤ 12`.
    pub fn power(&self, grid: &Grid, m: u32) -> Result<Field> {
        if !(1..=Self::MAX_POWER).contains(&m) {
            return Err(Error::InvalidParameter {
                name: "power",
                reason: format!("must lie in 1..={}, got {m}", Self::MAX_POWER),
            });
        }
        let l = grid.length();
        let z = self.center;
        Ok(Field::from_fn(*grid, |x| {
            let d = l / PI * (PI * (x - z) / l).sin();
            (1.0 / (d / Self::SCALE).cosh()).powi(m as i32)
        }))
    }
}

/// Evenly spaced centers across the period.
pub fn center_grid(grid: &Grid, spacing: f64) -> Result<Vec<f64>> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidParameter {
            name: "center_spacing",
            reason: format!("must be finite and positive, got {spacing}"),
        });
    }
    let count = (grid.length() / spacing).ceil().max(1.0) as usize;
    Ok((0..count).map(|i| -grid.length() / 2.0 + i as f64 * spacing).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LSReport {
    pub kappa: f64,
    pub centers: Vec<f64>,
    /// `‖(ψ_z⁶ q)''‖_{L²_t H^{-1}_ϰ}` per center.
    pub values: Vec<f64>,
    pub supremum: f64,
    pub window: (f64, f64),
}

impl LSReport {
    /// `(z, kappa, ls_value)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.centers
            .iter()
            .zip(&self.values)
            .map(move |(&z, &v)| (z, self.kappa, v))
    }
}

/// Local-smoothing norm over the standard window `[−1, 1]`.
pub fn ls_norm(traj: &TrajectoryRecord, kappa: f64, centers: &[f64]) -> Result<LSReport> {
    ls_norm_window(traj, kappa, centers, LS_WINDOW)
}

/// Per center, the trapezoid rule in `t` over the snapshots inside the
/// window of `‖(ψ_z⁶ q)''‖²_{H^{-1}_ϰ}`, square-rooted; supremum over
/// centers.
pub fn ls_norm_window(traj: &TrajectoryRecord, kappa: f64, centers: &[f64], window: (f64, f64)) -> Result<LSReport> {
    check_kappa("kappa", kappa)?;
    if centers.is_empty() || centers.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "centers",
            reason: "need at least one finite center".into(),
        });
    }
    let (t0, t1) = window;
    let (start, end) = match (traj.snapshots.first(), traj.snapshots.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => (f64::NAN, f64::NAN),
    };
    let tol = 1e-9 * (1.0 + t0.abs().max(t1.abs()));
    if !(t0 < t1) || !(start <= t0 + tol && end >= t1 - tol) {
        return Err(Error::WindowNotCovered { t0, t1, start, end });
    }
    let inside: Vec<&(f64, Field)> = traj
        .snapshots
        .iter()
        .filter(|(t, _)| *t >= t0 - tol && *t <= t1 + tol)
        .collect();
    let grid = *inside[0].1.grid();
    let values: Vec<f64> = centers
        .par_iter()
        .map(|&z| {
            let w = WeightFamily::new(z).power(&grid, 6)?;
            let sq: Vec<f64> = inside
                .iter()
                .map(|(_, q)| {
                    let f = ops::derivative(&w.pointwise(q), 2);
                    Ok(sobolev_norm(&f, -1.0, kappa)?.powi(2))
                })
                .collect::<Result<_>>()?;
            let integral: f64 = (1..inside.len())
                .map(|i| 0.5 * (inside[i].0 - inside[i - 1].0) * (sq[i] + sq[i - 1]))
                .sum();
            Ok(integral.sqrt())
        })
        .collect::<Result<_>>()?;
    let supremum = values.iter().copied().fold(0.0, f64::max);
    Ok(LSReport {
        kappa,
        centers: centers.to_vec(),
        values,
        supremum,
        window,
    })
}
