use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FlowSpec;
use crate::error::{Error, Result};
use crate::hamiltonians::{check_kappa_list, conserved_report_with, ConservedReport};
use crate::spectral::{apply_multiplier_complex, Field, Grid, Spectrum, Symbol};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Integrating-factor (Lawson) classical RK4.
    #[default]
    #[serde(rename = "IFRK4", alias = "ifrk4")]
    Ifrk4,
}

/// Time-stepping parameters.
///
/// The initial datum sits at `t = 0`; the run covers `[t_start, t_end]`
/// with `t_start ≤ 0 ≤ t_end`, stepping backward for negative times.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Replaces the flow's own integrating-factor symbol; the vector field is
    /// unchanged, only the split between exact and RK4 parts moves.
    #[serde(skip)]
    pub linear_symbol_override: Option<Symbol>,
    /// Conserved quantities every this many steps; `0` records only the end
    /// points.
    #[serde(default = "one")]
    pub conserved_sample_stride: usize,
    /// Snapshot every this many steps; end points are always kept.
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    /// `ϰ` values at which `α(ϰ)` is sampled alongside the polynomial
    /// functionals.
    #[serde(default)]
    pub alpha_kappas: Vec<f64>,
    /// Largest allowed `dt · Lip(N)` with `Lip(N)` estimated at the initial
    /// datum.
    #[serde(default = "default_stability_limit")]
    pub stability_limit: f64,
}

fn one() -> usize {
    1
}

fn default_stability_limit() -> f64 {
    0.5
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_start: 0.0,
            t_end,
            scheme: Scheme::Ifrk4,
            linear_symbol_override: None,
            conserved_sample_stride: 1,
            snapshot_stride: 1,
            alpha_kappas: Vec::new(),
            stability_limit: default_stability_limit(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be finite and positive");
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return bad("t_end", "time window must be finite");
        }
        if self.t_start > 0.0 || self.t_end < 0.0 || self.t_start == self.t_end {
            return bad(
                "t_end",
                "window must satisfy t_start <= 0 <= t_end with t_start < t_end",
            );
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride", "must be at least 1");
        }
        if !(self.stability_limit.is_finite() && self.stability_limit > 0.0) {
            return bad("stability_limit", "must be finite and positive");
        }
        check_kappa_list(&self.alpha_kappas)
    }
}

/// Output of [`integrate`].
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// `(t, q(t))`, times strictly increasing.
    pub snapshots: Vec<(f64, Field)>,
    /// Conserved quantities, times strictly increasing.
    pub conserved: Vec<ConservedReport>,
    pub flow: FlowSpec,
    pub integrator: IntegratorConfig,
}

impl TrajectoryRecord {
    pub fn grid(&self) -> Option<&Grid> {
        self.snapshots.first().map(|(_, f)| f.grid())
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn final_state(&self) -> Option<&Field> {
        self.snapshots.last().map(|(_, f)| f)
    }

    /// Snapshot at exactly time `t`, if recorded.
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|(s, _)| *s == t).map(|(_, f)| f)
    }

    /// Largest relative drift, over the recorded conserved reports, of each
    /// `(name, kappa)` row against its value at `t = 0`.
    pub fn max_relative_drift(&self) -> Vec<(&'static str, Option<f64>, f64)> {
        let Some(base) = self.conserved.iter().find(|r| r.t == 0.0) else {
            return Vec::new();
        };
        let base_rows = base.rows();
        base_rows
            .iter()
            .enumerate()
            .map(|(i, &(name, kappa, v0))| {
                let scale = v0.abs().max(f64::MIN_POSITIVE);
                let drift = self
                    .conserved
                    .iter()
                    .map(|r| (r.rows()[i].2 - v0).abs() / scale)
                    .fold(0.0, f64::max);
                (name, kappa, drift)
            })
            .collect()
    }
}

/// Split `q_t = L q + N(q)` with `L` possibly overridden.
struct Split<'a> {
    flow: &'a FlowSpec,
    own: Symbol,
    used: Symbol,
    overridden: bool,
}

impl<'a> Split<'a> {
    fn new(flow: &'a FlowSpec, override_symbol: Option<&Symbol>) -> Self {
        let own = flow.linear_symbol();
        let (used, overridden) = match override_symbol {
            Some(s) => (s.clone(), true),
            None => (own.clone(), false),
        };
        Self {
            flow,
            own,
            used,
            overridden,
        }
    }

    fn nonlinear(&self, q: &Field) -> Result<Field> {
        let n = self.flow.nonlinear(q)?;
        if !self.overridden {
            return Ok(n);
        }
        let a = apply_multiplier_complex(&self.own, q).to_field();
        let b = apply_multiplier_complex(&self.used, q).to_field();
        Ok(&(&n + &a) - &b)
    }
}

/// Power-iteration estimate of the Lipschitz constant of the nonlinear part
/// (in `L²`) at `q`, by central differences of the vector field.
pub fn lipschitz_estimate(flow: &FlowSpec, q: &Field, override_symbol: Option<&Symbol>) -> Result<f64> {
    let split = Split::new(flow, override_symbol);
    lipschitz_of(&split, q)
}

fn lipschitz_of(split: &Split<'_>, q: &Field) -> Result<f64> {
    let grid = *q.grid();
    let n = grid.points();
    // deterministic broadband start vector
    let mut v = Field::from_fn(grid, |x| {
        (0..n / 2)
            .map(|k| ((k as f64) * 0.7 + 0.3).cos() * (grid.dxi() * k as f64 * x + 1.3 * k as f64).cos())
            .sum()
    });
    let scale = q.l2_norm().max(1.0);
    let mut lambda = 0.0f64;
    for _ in 0..30 {
        let vn = v.l2_norm();
        if vn == 0.0 {
            break;
        }
        v = v.scale(1.0 / vn);
        let eps = 1e-6 * scale;
        let plus = split.nonlinear(&q.axpy(eps, &v))?;
        let minus = split.nonlinear(&q.axpy(-eps, &v))?;
        let jv = (&plus - &minus).scale(0.5 / eps);
        let r = jv.l2_norm();
        lambda = lambda.max(r);
        if r == 0.0 {
            break;
        }
        v = jv;
    }
    Ok(lambda)
}

struct Stepper<'a> {
    split: &'a Split<'a>,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    dt: f64,
}

impl<'a> Stepper<'a> {
    fn new(split: &'a Split<'a>, grid: &Grid, dt: f64) -> Self {
        let l = split.used.lattice_values(grid);
        let e = l.iter().map(|z| (z * dt).exp()).collect();
        let e2 = l.iter().map(|z| (z * (0.5 * dt)).exp()).collect();
        Self { split, e, e2, dt }
    }

    fn n_hat(&self, u: &[Complex64], grid: &Grid) -> Result<Vec<Complex64>> {
        let q = Spectrum::new(*grid, u.to_vec()).to_field();
        Ok(self.split.nonlinear(&q)?.spectrum().to_vec())
    }

    fn step(&self, q: &Field) -> Result<Field> {
        let grid = *q.grid();
        let dt = self.dt;
        let u = q.spectrum();
        let mul =
            |m: &[Complex64], a: &[Complex64]| -> Vec<Complex64> { m.iter().zip(a).map(|(x, y)| x * y).collect() };
        let comb = |a: &[Complex64], c: f64, b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x + y * c).collect()
        };
        let k1 = self.n_hat(u, &grid)?;
        let k2 = self.n_hat(&mul(&self.e2, &comb(u, 0.5 * dt, &k1)), &grid)?;
        let e2u = mul(&self.e2, u);
        let k3 = self.n_hat(&comb(&e2u, 0.5 * dt, &k2), &grid)?;
        let eu = mul(&self.e, u);
        let k4 = self.n_hat(&comb(&eu, dt, &mul(&self.e2, &k3)), &grid)?;
        let out: Vec<Complex64> = (0..u.len())
            .map(|k| eu[k] + dt / 6.0 * (self.e[k] * k1[k] + 2.0 * self.e2[k] * (k2[k] + k3[k]) + k4[k]))
            .collect();
        Ok(Spectrum::new(grid, out).to_field())
    }
}

struct Segment {
    snapshots: Vec<(f64, Field)>,
    conserved: Vec<ConservedReport>,
}

/// Integrate `q0` (taken at `t = 0`) over the configured window.
pub fn integrate(q0: &Field, flow: &FlowSpec, cfg: &IntegratorConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    flow.validate()?;
    if let Some(index) = q0.samples().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let grid = *q0.grid();
    if let Some(s) = &cfg.linear_symbol_override {
        let (mode, defect) = s.hermitian_defect(&grid);
        if !s.is_hermitian(&grid) {
            return Err(Error::NonHermitianSymbol { mode, defect });
        }
    }
    let split = Split::new(flow, cfg.linear_symbol_override.as_ref());
    let lip = lipschitz_of(&split, q0)?;
    let dt_max = [cfg.t_end, -cfg.t_start]
        .into_iter()
        .filter(|&s| s > 0.0)
        .map(|s| s / (s / cfg.dt).ceil())
        .fold(0.0, f64::max);
    let product = dt_max * lip;
    if product > cfg.stability_limit {
        return Err(Error::StabilityGuard {
            product,
            limit: cfg.stability_limit,
        });
    }

    let mut record = TrajectoryRecord {
        snapshots: Vec::new(),
        conserved: Vec::new(),
        flow: *flow,
        integrator: cfg.clone(),
    };
    let backward = if cfg.t_start < 0.0 {
        match run_segment(q0, &split, cfg, -cfg.t_start, -1.0) {
            Ok(s) => Some(s),
            Err((t, s)) => {
                record.snapshots = s.snapshots.into_iter().rev().collect();
                record.conserved = s.conserved.into_iter().rev().collect();
                return Err(aborted(t, record));
            }
        }
    } else {
        None
    };
    if let Some(b) = backward {
        record.snapshots.extend(b.snapshots.into_iter().rev());
        record.conserved.extend(b.conserved.into_iter().rev());
        // t = 0 is re-recorded by the forward segment
        if cfg.t_end > 0.0 {
            record.snapshots.pop();
            record.conserved.retain(|r| r.t != 0.0);
        }
    }
    if cfg.t_end > 0.0 {
        match run_segment(q0, &split, cfg, cfg.t_end, 1.0) {
            Ok(s) => {
                record.snapshots.extend(s.snapshots);
                merge_conserved(&mut record.conserved, s.conserved);
            }
            Err((t, s)) => {
                record.snapshots.extend(s.snapshots);
                merge_conserved(&mut record.conserved, s.conserved);
                return Err(aborted(t, record));
            }
        }
    }
    Ok(record)
}

fn merge_conserved(into: &mut Vec<ConservedReport>, more: Vec<ConservedReport>) {
    for r in more {
        if into.last().is_none_or(|l| l.t < r.t) {
            into.push(r);
        }
    }
}

fn aborted(t: f64, partial: TrajectoryRecord) -> Error {
    Error::Aborted {
        t,
        partial: Box::new(partial),
    }
}

/// Runs from `t = 0` to `direction · span`. On a non-finite state returns the
/// time reached and everything recorded before it.
fn run_segment(
    q0: &Field,
    split: &Split<'_>,
    cfg: &IntegratorConfig,
    span: f64,
    direction: f64,
) -> std::result::Result<Segment, (f64, Segment)> {
    let steps = (span / cfg.dt).ceil() as usize;
    let dt = span / steps as f64;
    let grid = *q0.grid();
    let stepper = Stepper::new(split, &grid, direction * dt);
    let mut seg = Segment {
        snapshots: vec![(0.0, q0.clone())],
        conserved: Vec::new(),
    };
    let report =
        |q: &Field, t: f64| conserved_report_with(q, &cfg.alpha_kappas, t, split.flow.green_route, &split.flow.green);
    match report(q0, 0.0) {
        Ok(r) => seg.conserved.push(r),
        Err(_) => return Err((0.0, seg)),
    }
    let mut q = q0.clone();
    for n in 1..=steps {
        let t = direction * if n == steps { span } else { n as f64 * dt };
        q = match stepper.step(&q) {
            Ok(next) if next.is_finite() && next.max_abs() < 1e150 => next,
            _ => return Err((t, seg)),
        };
        let last = n == steps;
        if last || n % cfg.snapshot_stride == 0 {
            seg.snapshots.push((t, q.clone()));
        }
        if last || (cfg.conserved_sample_stride > 0 && n % cfg.conserved_sample_stride == 0) {
            match report(&q, t) {
                Ok(r) => seg.conserved.push(r),
                Err(_) => return Err((t, seg)),
            }
        }
    }
    Ok(seg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{FlowKind, FlowSpec};
    use crate::initial::{gaussian, random_band_limited};
    use crate::spectral::{h_minus1_norm, Grid};
    use std::f64::consts::PI;

    #[test]
    fn translation_is_exact() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let q0 = Field::from_fn(g, |x| (x.sin()).exp() - 1.0);
        let cfg = IntegratorConfig::new(0.1, 0.7);
        let rec = integrate(&q0, &FlowSpec::new(FlowKind::Translation), &cfg).unwrap();
        let (t, q) = rec.snapshots.last().unwrap();
        assert!((t - 0.7).abs() < 1e-15);
        let expect = Field::from_fn(g, |x| ((x + 0.7).sin()).exp() - 1.0);
        assert!(q.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn backward_window_merges() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q0 = Field::from_fn(g, f64::cos);
        let mut cfg = IntegratorConfig::new(0.1, 0.3);
        cfg.t_start = -0.2;
        let rec = integrate(&q0, &FlowSpec::new(FlowKind::Translation), &cfg).unwrap();
        let ts = rec.times();
        assert_eq!(ts.len(), 6);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(rec.conserved.windows(2).all(|w| w[0].t < w[1].t));
        let q = rec.at(-0.2).unwrap();
        assert!(q.max_abs_diff(&Field::from_fn(g, |x| (x - 0.2).cos())) < 1e-12);
    }

    #[test]
    fn invalid_windows_rejected() {
        let g = Grid::new(10.0, 32).unwrap();
        let q0 = Field::zeros(g);
        let flow = FlowSpec::new(FlowKind::Kdv);
        for cfg in [
            IntegratorConfig::new(0.0, 1.0),
            IntegratorConfig::new(0.1, -1.0),
            IntegratorConfig::new(0.1, 0.0),
        ] {
            assert!(matches!(
                integrate(&q0, &flow, &cfg),
                Err(Error::InvalidParameter { .. })
            ));
        }
    }

    #[test]
    fn kdv_soliton_speed() {
        // −2κ₀² sech²(κ₀ x) solves q_t = −q''' + 6qq' as q0(x − 4κ₀² t)
        let kappa0 = 0.5;
        let g = Grid::new(60.0, 256).unwrap();
        let q0 = crate::initial::soliton(g, kappa0, 0.0);
        // residual substitution: rhs(q0) = c q0' fixes c before the run
        let r = super::super::rhs_kdv(&q0);
        let d = crate::spectral::ops::derivative(&q0, 1);
        let c = -r.inner(&d) / d.inner(&d);
        assert!((c - 4.0 * kappa0 * kappa0).abs() < 1e-9);
        let t = 2.0;
        let rec = integrate(&q0, &FlowSpec::new(FlowKind::Kdv), &IntegratorConfig::new(1e-2, t)).unwrap();
        let expect = crate::initial::soliton(g, kappa0, c * t);
        assert!(rec.final_state().unwrap().max_abs_diff(&expect) < 1e-7);
    }

    #[test]
    fn stability_guard_refuses_large_steps() {
        let g = Grid::new(50.0, 256).unwrap();
        let q0 = random_band_limited(g, 0.1, 3, 64).unwrap();
        let cfg = IntegratorConfig::new(0.1, 1.0);
        assert!(matches!(
            integrate(&q0, &FlowSpec::new(FlowKind::Fifth), &cfg),
            Err(Error::StabilityGuard { .. })
        ));
    }

    #[test]
    fn blowup_returns_partial_record() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q0 = Field::from_fn(g, |x| 3.0 * x.cos());
        let mut cfg = IntegratorConfig::new(0.05, 50.0);
        cfg.stability_limit = 1e6;
        // no integrating factor, so the stiff linear part destabilizes RK4
        cfg.linear_symbol_override = Some(Symbol::real("0", |_| 0.0));
        match integrate(&q0, &FlowSpec::new(FlowKind::Fifth), &cfg) {
            Err(Error::Aborted { t, partial }) => {
                assert!(t > 0.0 && t < 50.0);
                assert!(!partial.snapshots.is_empty());
                assert!(partial.snapshots.iter().all(|(_, f)| f.is_finite()));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn override_keeps_vector_field() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let q0 = Field::from_fn(g, |x| 0.1 * x.sin());
        let flow = FlowSpec::new(FlowKind::Kdv);
        let a = integrate(&q0, &flow, &IntegratorConfig::new(1e-3, 0.05)).unwrap();
        let mut cfg = IntegratorConfig::new(1e-3, 0.05);
        cfg.linear_symbol_override = Some(Symbol::derivative(3).compose(&Symbol::real("-1", |_| -1.0)));
        let b = integrate(&q0, &flow, &cfg).unwrap();
        assert!(a.final_state().unwrap().max_abs_diff(b.final_state().unwrap()) < 1e-9);
    }

    fn final_of(q0: &Field, flow: &FlowSpec, dt: f64, t_end: f64) -> Field {
        let mut cfg = IntegratorConfig::new(dt, t_end);
        cfg.snapshot_stride = usize::MAX;
        cfg.conserved_sample_stride = 0;
        integrate(q0, flow, &cfg).unwrap().final_state().unwrap().clone()
    }

    #[test]
    fn fourth_order_convergence() {
        let g = Grid::new(40.0, 128).unwrap();
        let q0 = gaussian(g, 0.3, 1.5, 0.0);
        let flow = FlowSpec::new(FlowKind::Kdv);
        let t = 0.5;
        let reference = final_of(&q0, &flow, 1e-4, t);
        let errs: Vec<f64> = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&dt| h_minus1_norm(&(&final_of(&q0, &flow, dt, t) - &reference)))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((12.0..20.0).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn reversibility() {
        let g = Grid::new(50.0, 256).unwrap();
        let q0 = gaussian(g, 0.05, 1.0, 3.0);
        let flow = FlowSpec::new(FlowKind::Fifth);
        let dt = 1e-4;
        let q1 = final_of(&q0, &flow, dt, dt);
        let mut back = IntegratorConfig::new(dt, 0.0);
        back.t_start = -dt;
        let rec = integrate(&q1, &flow, &back).unwrap();
        let q_back = rec.at(-dt).unwrap();
        assert!(h_minus1_norm(&(q_back - &q0)) < 1e-8);
    }

    #[test]
    fn fifth_flow_conserves() {
        let g = Grid::new(50.0, 256).unwrap();
        let q0 = gaussian(g, 0.05, 1.0, -2.0);
        let mut cfg = IntegratorConfig::new(1e-4, 0.02);
        cfg.alpha_kappas = vec![2.0, 4.0];
        cfg.conserved_sample_stride = 20;
        let rec = integrate(&q0, &FlowSpec::new(FlowKind::Fifth), &cfg).unwrap();
        for (name, kappa, drift) in rec.max_relative_drift() {
            if name == "M" {
                continue;
            }
            assert!(drift < 1e-6, "{name} {kappa:?}: {drift:e}");
        }
        let m0 = rec.conserved[0].mass;
        assert!(rec.conserved.iter().all(|r| (r.mass - m0).abs() < 1e-12));
    }

    #[test]
    fn flows_commute_for_small_data() {
        let g = Grid::new(40.0, 128).unwrap();
        let q0 = gaussian(g, 0.05, 1.5, 0.0);
        let f5 = FlowSpec::new(FlowKind::Fifth);
        let fk = FlowSpec::new(FlowKind::HKappa { kappa: 2.0 });
        let (s, t) = (0.02, 0.02);
        // the defect is pure time-stepping error: it shrinks at fourth order
        let defect = |dt: f64| {
            let a = final_of(&final_of(&q0, &f5, dt, t), &fk, dt, s);
            let b = final_of(&final_of(&q0, &fk, dt, s), &f5, dt, t);
            h_minus1_norm(&(&a - &b))
        };
        let (d1, d2) = (defect(1e-3), defect(2.5e-4));
        assert!(d2 < 1e-9 && d1 / d2 > 100.0, "{d1:e} {d2:e}");
    }
}
