use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_kappa, Error, Result};
use crate::flows::{integrate, FlowKind, FlowSpec, IntegratorConfig, TrajectoryRecord};
use crate::hamiltonians::check_kappa_list;
use crate::schrodinger::{green_diagonal, GreenConfig, GreenRoute};
use crate::spectral::{h_minus1_norm, Field};

/// Parameters of [`kappa_convergence_study`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaStudy {
    pub t_end: f64,
    pub dt: f64,
    /// Energy parameter of the Green's-function pairing.
    pub varkappa: f64,
    #[serde(default)]
    pub route: GreenRoute,
    #[serde(default)]
    pub green: GreenConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub kappa: f64,
    /// `sup_t ‖q_κ(t) − q(t)‖_{H^{-1}}`.
    pub distance: f64,
    /// `sup_t |⟨φ, 1/g(t) − 1/g_κ(t)⟩|` at energy `ϰ`.
    pub proxy: f64,
}

fn run(q0: &Field, kind: FlowKind, study: &KappaStudy) -> Result<TrajectoryRecord> {
    let flow = FlowSpec {
        kind,
        green_route: study.route,
        green: study.green,
    };
    let mut cfg = IntegratorConfig::new(study.dt, study.t_end);
    cfg.conserved_sample_stride = 0;
    integrate(q0, &flow, &cfg)
}

/// Distance between the `H_κ` and fifth-order flows from the same datum, for
/// each `κ`, together with the Green's-function pairing against `φ`.
pub fn kappa_convergence_study(q0: &Field, kappas: &[f64], phi: &Field, study: &KappaStudy) -> Result<Vec<KappaRow>> {
    check_kappa_list(kappas)?;
    check_kappa("varkappa", study.varkappa)?;
    q0.grid().ensure_same(phi.grid())?;
    if !(study.t_end.is_finite() && study.t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: "must be finite and positive".into(),
        });
    }
    let v = study.varkappa;
    let images = |traj: &TrajectoryRecord| -> Result<Vec<Field>> {
        traj.snapshots
            .par_iter()
            .map(|(_, q)| Ok(green_diagonal(q, v, study.route, &study.green)?.diffeo_image()))
            .collect()
    };
    let full = run(q0, FlowKind::Fifth, study)?;
    let full_images = images(&full)?;
    kappas
        .par_iter()
        .map(|&kappa| {
            let traj = run(q0, FlowKind::HKappa { kappa }, study)?;
            let imgs = images(&traj)?;
            let mut distance = 0.0f64;
            let mut proxy = 0.0f64;
            for (i, ((ta, qa), (tb, qb))) in traj.snapshots.iter().zip(&full.snapshots).enumerate() {
                debug_assert_eq!(ta, tb);
                distance = distance.max(h_minus1_norm(&(qa - qb)));
                // 1/g = 2ϰ − image
                proxy = proxy.max(phi.inner(&(&imgs[i] - &full_images[i])).abs());
            }
            Ok(KappaRow { kappa, distance, proxy })
        })
        .collect()
}
