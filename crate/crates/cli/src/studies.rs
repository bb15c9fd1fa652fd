//! Named studies and the invariants each one reports.

use kdv5::diagnostics::{
    center_grid, kappa_convergence_study, ls_norm_window, microscopic_residual, series_identity_check, KappaStudy,
};
use kdv5::flows::{integrate, FlowKind, IntegratorConfig, TrajectoryRecord};
use kdv5::initial::gaussian;
use kdv5::schrodinger::{diffeo_forward_with, diffeo_inverse_with};
use kdv5::spectral::{h_minus1_norm, sobolev_norm};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{Experiment, Format};
use crate::error::{from_run, CliError};
use crate::output::Sink;

pub const DRIFT_TOLERANCE: f64 = 1e-6;
pub const IDENTITY_TOLERANCE: (f64, f64) = (1e-10, 1e-8);
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-8;
pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const MICROSCOPIC_MIN_RATIO: f64 = 3.5;
pub const MICROSCOPIC_LADDER: usize = 4;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Evolve,
    Conserve,
    Microscopic,
    Ls,
    KappaConvergence,
    Identities,
    DiffeoRoundtrip,
}

/// One PASS/FAIL line.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            pass,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

impl Study {
    pub const ALL: [Study; 7] = [
        Study::Evolve,
        Study::Conserve,
        Study::Microscopic,
        Study::Ls,
        Study::KappaConvergence,
        Study::Identities,
        Study::DiffeoRoundtrip,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Study::Evolve => "evolve",
            Study::Conserve => "conserve",
            Study::Microscopic => "microscopic",
            Study::Ls => "ls",
            Study::KappaConvergence => "kappa-convergence",
            Study::Identities => "identities",
            Study::DiffeoRoundtrip => "diffeo-roundtrip",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Study::Evolve => "integrate the flow; write snapshots and conserved quantities",
            Study::Conserve => "integrate the flow; check relative drift of P, H_KdV, H_5th and alpha",
            Study::Microscopic => "residual of the local balance law rho_t + j_x = 0 over a dt ladder",
            Study::Ls => "local-smoothing norm per center and kappa over the diagnostics window",
            Study::KappaConvergence => "distance between the H_kappa and fifth-order flows for each kappa",
            Study::Identities => "residuals of the exact series identities for h_1 and h_2",
            Study::DiffeoRoundtrip => "q -> 2 kappa - 1/g -> q round trip error in H^-1",
        }
    }

    /// Study-specific requirements on the configuration.
    pub fn integrates(&self) -> bool {
        !matches!(self, Study::Identities | Study::DiffeoRoundtrip)
    }

    pub fn check(&self, exp: &Experiment) -> Result<(), CliError> {
        if !self.integrates() {
            return Ok(());
        }
        let Some(cfg) = &exp.config.integrator else {
            return Err(CliError::invalid(
                "integrator",
                format!("required by study {}", self.name()),
            ));
        };
        let [w0, w1] = exp.config.diagnostics.window;
        let covers = cfg.t_start <= w0 && cfg.t_end >= w1;
        match self {
            Study::Microscopic => {
                if matches!(exp.flow.kind, FlowKind::Kdv | FlowKind::Translation) {
                    return Err(CliError::invalid(
                        "flow.kind",
                        "microscopic currents exist for fifth, h_kappa and difference flows only",
                    ));
                }
                if !covers {
                    return Err(CliError::invalid(
                        "diagnostics.window",
                        "must lie inside [integrator.t_start, integrator.t_end]",
                    ));
                }
            }
            Study::Ls if !covers => {
                return Err(CliError::invalid(
                    "diagnostics.window",
                    "must lie inside [integrator.t_start, integrator.t_end]",
                ));
            }
            Study::KappaConvergence if cfg.t_end <= 0.0 => {
                return Err(CliError::invalid(
                    "integrator.t_end",
                    "must be positive for kappa-convergence",
                ));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn run(&self, exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
        match self {
            Study::Evolve => evolve(exp, sink),
            Study::Conserve => conserve(exp, sink),
            Study::Microscopic => microscopic(exp, sink),
            Study::Ls => ls(exp, sink),
            Study::KappaConvergence => kappa_convergence(exp, sink),
            Study::Identities => identities(exp, sink),
            Study::DiffeoRoundtrip => diffeo_roundtrip(exp, sink),
        }
    }
}

/// Integrates; on a non-finite abort the partial record is still written.
fn trajectory(exp: &Experiment, cfg: &IntegratorConfig, sink: &mut Sink) -> Result<TrajectoryRecord, CliError> {
    match integrate(&exp.q0, &exp.flow, cfg) {
        Ok(rec) => Ok(rec),
        Err(kdv5::Error::Aborted { t, partial }) => {
            write_trajectory(exp, &partial, sink)?;
            Err(CliError::Numerical(kdv5::Error::Aborted { t, partial }))
        }
        Err(e) => Err(from_run("integrator", e)),
    }
}

fn write_trajectory(exp: &Experiment, rec: &TrajectoryRecord, sink: &mut Sink) -> Result<(), CliError> {
    let out = &exp.config.output;
    if out.wants(Format::Jsonl) {
        sink.snapshots("snapshots.jsonl", rec)?;
    }
    if out.wants(Format::Csv) {
        sink.conserved("conserved.csv", &rec.conserved)?;
    }
    Ok(())
}

fn evolve(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let rec = trajectory(exp, exp.integrator(), sink)?;
    write_trajectory(exp, &rec, sink)?;
    let times = rec.times();
    let finite = rec
        .snapshots
        .iter()
        .all(|(_, q)| q.samples().iter().all(|v| v.is_finite()));
    Ok(vec![Check::new(
        "trajectory",
        finite,
        format!(
            "{} snapshots on [{}, {}], all finite",
            times.len(),
            times.first().copied().unwrap_or(0.0),
            times.last().copied().unwrap_or(0.0)
        ),
    )])
}

fn conserve(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let mut cfg = exp.integrator().clone();
    if cfg.alpha_kappas.is_empty() {
        cfg.alpha_kappas = exp.config.diagnostics.kappa_list.clone();
    }
    let rec = trajectory(exp, &cfg, sink)?;
    write_trajectory(exp, &rec, sink)?;
    let drift = rec.max_relative_drift();
    if exp.config.output.wants(Format::Csv) {
        sink.table(
            "drift.csv",
            &["quantity", "kappa", "max_relative_drift"],
            drift.iter().copied(),
        )?;
    }
    let worst = drift
        .iter()
        .filter(|(name, _, _)| *name != "M")
        .fold(("none", None, 0.0f64), |w, &d| if d.2 > w.2 { d } else { w });
    let label = match worst.1 {
        Some(k) => format!("{}({k})", worst.0),
        None => worst.0.to_string(),
    };
    Ok(vec![Check::new(
        "conservation",
        worst.2 < DRIFT_TOLERANCE,
        format!("max relative drift {:.3e} ({label}) < {DRIFT_TOLERANCE:e}", worst.2),
    )])
}

fn microscopic(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let d = &exp.config.diagnostics;
    let window = (d.window[0], d.window[1]);
    let mut rows = Vec::new();
    for level in 0..MICROSCOPIC_LADDER {
        let mut cfg = exp.integrator().clone();
        cfg.dt /= (1u32 << level) as f64;
        cfg.conserved_sample_stride = 0;
        let rec = trajectory(exp, &cfg, sink)?;
        let r = microscopic_residual(&rec, d.varkappa, window).map_err(|e| from_run("diagnostics", e))?;
        rows.push((cfg.dt, d.varkappa, r));
    }
    if exp.config.output.wants(Format::Csv) {
        sink.table("microscopic.csv", &["dt", "varkappa", "residual"], rows.iter().copied())?;
    }
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].2 / w[1].2).collect();
    let text = ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join("/");
    let vanishing = rows.iter().all(|r| r.2 == 0.0);
    Ok(vec![Check::new(
        "microscopic",
        vanishing || ratios.iter().all(|&r| r >= MICROSCOPIC_MIN_RATIO),
        if vanishing {
            "residual identically zero".to_string()
        } else {
            format!("residual ratios under dt halving {text} (each >= {MICROSCOPIC_MIN_RATIO})")
        },
    )])
}

fn ls(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let d = &exp.config.diagnostics;
    let mut cfg = exp.integrator().clone();
    cfg.conserved_sample_stride = 0;
    let rec = trajectory(exp, &cfg, sink)?;
    let centers = center_grid(&exp.grid, d.center_spacing).map_err(|e| from_run("diagnostics.center_spacing", e))?;
    let window = (d.window[0], d.window[1]);
    let reports = d
        .kappa_list
        .par_iter()
        .map(|&k| ls_norm_window(&rec, k, &centers, window))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| from_run("diagnostics", e))?;
    if exp.config.output.wants(Format::Csv) {
        sink.table(
            "ls.csv",
            &["z", "kappa", "ls_value"],
            reports.iter().flat_map(|r| r.rows()),
        )?;
    }
    let delta = exp.flow.green.delta;
    let ratios = reports
        .iter()
        .map(|r| {
            let h = sobolev_norm(&exp.q0, -1.0, r.kappa).map_err(|e| from_run("diagnostics", e))?;
            let denom = h * h + r.kappa.powf(-1.0 / 6.0) * delta * delta;
            Ok((r.kappa, r.supremum.powi(2) / denom))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if exp.config.output.wants(Format::Csv) {
        sink.table("ls_bound.csv", &["kappa", "ratio"], ratios.iter().copied())?;
    }
    let c = ratios[0].1;
    let finite = reports.iter().all(|r| r.values.iter().all(|v| v.is_finite()));
    let text = ratios
        .iter()
        .map(|(k, r)| format!("{k}:{r:.3e}"))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(vec![
        Check::new(
            "ls_finite",
            finite,
            format!("{} centers x {} kappas", centers.len(), ratios.len()),
        ),
        Check::new(
            "ls_bound",
            ratios.iter().all(|&(_, r)| r.is_finite() && r <= c * (1.0 + 1e-12)),
            format!("sup^2 / (|q0|^2 + kappa^(-1/6) delta^2) {text} <= value at smallest kappa"),
        ),
    ])
}

fn kappa_convergence(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let d = &exp.config.diagnostics;
    let cfg = exp.integrator();
    let study = KappaStudy {
        t_end: cfg.t_end,
        dt: cfg.dt,
        varkappa: d.varkappa,
        route: exp.flow.green_route,
        green: exp.flow.green,
    };
    let phi = gaussian(exp.grid, 1.0, 1.0, 0.0);
    let rows = kappa_convergence_study(&exp.q0, &d.kappa_list, &phi, &study).map_err(|e| from_run("diagnostics", e))?;
    if exp.config.output.wants(Format::Csv) {
        sink.table(
            "kappa_convergence.csv",
            &["kappa", "distance", "proxy"],
            rows.iter().map(|r| (r.kappa, r.distance, r.proxy)),
        )?;
    }
    let zero = rows.iter().all(|r| r.distance == 0.0 && r.proxy == 0.0);
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].distance < w[0].distance && w[1].proxy < w[0].proxy);
    let text = rows
        .iter()
        .map(|r| format!("{}:{:.2e}", r.kappa, r.distance))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(vec![Check::new(
        "kappa_convergence",
        zero || decreasing,
        if zero {
            "all distances zero".to_string()
        } else {
            format!("distances {text} strictly decreasing")
        },
    )])
}

fn identities(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let rows = exp
        .config
        .diagnostics
        .kappa_list
        .par_iter()
        .map(|&k| series_identity_check(&exp.q0, k).map(|(a, b)| (k, a, b)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| from_run("initial_data", e))?;
    if exp.config.output.wants(Format::Csv) {
        sink.table(
            "identities.csv",
            &["kappa", "residual1", "residual2"],
            rows.iter().copied(),
        )?;
    }
    let (t1, t2) = IDENTITY_TOLERANCE;
    let r1 = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let r2 = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(vec![
        Check::new("identity_h1", r1 < t1, format!("max residual {r1:.3e} < {t1:e}")),
        Check::new("identity_h2", r2 < t2, format!("max residual {r2:.3e} < {t2:e}")),
    ])
}

fn diffeo_roundtrip(exp: &Experiment, sink: &mut Sink) -> Result<Vec<Check>, CliError> {
    let route = exp.flow.green_route;
    let green = exp.flow.green;
    let rows = exp
        .config
        .diagnostics
        .kappa_list
        .par_iter()
        .map(|&k| {
            let w = diffeo_forward_with(&exp.q0, k, route, &green)?;
            let back = diffeo_inverse_with(&w, k, NEWTON_TOLERANCE, route, &green)?;
            Ok((k, h_minus1_norm(&(&back.q - &exp.q0)), back.iterations))
        })
        .collect::<Result<Vec<_>, kdv5::Error>>()
        .map_err(|e| from_run("initial_data", e))?;
    if exp.config.output.wants(Format::Csv) {
        sink.table(
            "diffeo_roundtrip.csv",
            &["kappa", "roundtrip_error", "newton_iterations"],
            rows.iter().copied(),
        )?;
    }
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(vec![Check::new(
        "diffeo_roundtrip",
        worst < ROUNDTRIP_TOLERANCE,
        format!("max H^-1 error {worst:.3e} < {ROUNDTRIP_TOLERANCE:e}"),
    )])
}
