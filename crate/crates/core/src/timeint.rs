//! Explicit Runge-Kutta integration with optional MOOD limiting.
//!
//! MOOD acts once per full step: the high-order candidate is checked against
//! the previous state and every rejected point is recomputed with one
//! forward-Euler step of the positive fallback scheme.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::mood::{detect, CurvatureSource, MoodConfig, MoodReport};
use crate::schemes::{RowScheme, SpatialScheme};
use crate::PointCloud;

/// Explicit Butcher tableau. `a` is strictly lower triangular, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub order: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    pub fn forward_euler() -> Self {
        Self { name: "fe", order: 1, a: vec![vec![]], b: vec![1.0], c: vec![0.0] }
    }

    /// Ralston's second-order method.
    pub fn ralston2() -> Self {
        Self {
            name: "rk2",
            order: 2,
            a: vec![vec![], vec![2.0 / 3.0]],
            b: vec![0.25, 0.75],
            c: vec![0.0, 2.0 / 3.0],
        }
    }

    /// Three-stage strong-stability-preserving method of order three.
    pub fn ssprk3() -> Self {
        Self {
            name: "rk3",
            order: 3,
            a: vec![vec![], vec![1.0], vec![0.25, 0.25]],
            b: vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            c: vec![0.0, 1.0, 0.5],
        }
    }

    /// The classical fourth-order method.
    pub fn rk4() -> Self {
        Self {
            name: "rk4",
            order: 4,
            a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
        }
    }

    /// Tableau of the given order (1 to 4).
    pub fn of_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self::forward_euler()),
            2 => Ok(Self::ralston2()),
            3 => Ok(Self::ssprk3()),
            4 => Ok(Self::rk4()),
            _ => Err(Error::InvalidConfig(format!("no Runge-Kutta tableau of order {order}"))),
        }
    }

    /// Looks up `fe`, `rk2`, `rk3` or `rk4`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "fe" | "euler" => Ok(Self::forward_euler()),
            "rk2" | "ralston" => Ok(Self::ralston2()),
            "rk3" | "ssprk3" => Ok(Self::ssprk3()),
            "rk4" => Ok(Self::rk4()),
            _ => Err(Error::InvalidConfig(format!("unknown time integrator `{name}`"))),
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Coefficients `p_k` of `R(z) = sum_k p_k z^k` with
    /// `p_0 = 1`, `p_k = b^T A^(k-1) 1`.
    pub fn stability_polynomial(&self) -> Vec<f64> {
        let s = self.stages();
        let mut coeffs = vec![1.0];
        let mut v = vec![1.0; s];
        for _ in 0..s {
            coeffs.push(self.b.iter().zip(&v).map(|(b, x)| b * x).sum());
            v = (0..s).map(|i| self.a[i].iter().zip(&v).map(|(a, x)| a * x).sum()).collect();
        }
        coeffs
    }

    pub fn amplification(&self, z: Complex<f64>) -> Complex<f64> {
        self.stability_polynomial().iter().rev().fold(Complex::new(0.0, 0.0), |acc, &p| acc * z + p)
    }
}

/// Stage storage reused across steps.
#[derive(Debug, Clone, Default)]
pub struct RkWorkspace {
    stages: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl RkWorkspace {
    fn prepare(&mut self, n: usize, s: usize) {
        self.stages.resize_with(s, Vec::new);
        for k in &mut self.stages {
            k.resize(n, 0.0);
        }
        self.tmp.resize(n, 0.0);
    }
}

/// One explicit Runge-Kutta step `u -> out`.
pub fn rk_step(scheme: &dyn SpatialScheme, u: &[f64], dt: f64, tab: &ButcherTableau, ws: &mut RkWorkspace, out: &mut [f64]) {
    let n = u.len();
    let s = tab.stages();
    ws.prepare(n, s);
    for stage in 0..s {
        ws.tmp.copy_from_slice(u);
        for (l, &a) in tab.a[stage].iter().enumerate() {
            if a != 0.0 {
                for (t, k) in ws.tmp.iter_mut().zip(&ws.stages[l]) {
                    *t += dt * a * k;
                }
            }
        }
        scheme.evaluate(&ws.tmp, &mut ws.stages[stage]);
    }
    out.copy_from_slice(u);
    for (k, &b) in ws.stages.iter().zip(&tab.b) {
        for (o, kv) in out.iter_mut().zip(k) {
            *o += dt * b * kv;
        }
    }
}

/// Overwrites `out[i]` with `u_i + dt * L_fallback(u)_i` at rejected points.
pub fn apply_fallback(fallback: &RowScheme, u: &[f64], dt: f64, report: &MoodReport, out: &mut [f64]) {
    for i in report.rejected() {
        out[i] = u[i] + dt * fallback.evaluate_at(i, u);
    }
}

/// Limiter state attached to a high-order run.
pub struct Mood {
    pub config: MoodConfig,
    pub curvature: CurvatureSource,
    pub fallback: RowScheme,
}

/// RK candidate, detection against `u`, fallback at rejected points.
#[allow(clippy::too_many_arguments)]
pub fn mood_step(
    scheme: &dyn SpatialScheme,
    mood: &Mood,
    cloud: &PointCloud,
    u: &[f64],
    dt: f64,
    tab: &ButcherTableau,
    ws: &mut RkWorkspace,
    out: &mut [f64],
) -> MoodReport {
    rk_step(scheme, u, dt, tab, ws, out);
    let report = detect(u, out, &mood.curvature, cloud, &mood.config);
    apply_fallback(&mood.fallback, u, dt, &report, out);
    report
}

#[derive(Debug, Clone)]
pub struct IntegrationConfig {
    /// Fraction of the forward-Euler positivity step.
    pub cfl: f64,
    pub t_end: f64,
    pub tableau: ButcherTableau,
    /// Keep per-step diagnostics.
    pub record_steps: bool,
}

impl IntegrationConfig {
    pub fn new(cfl: f64, t_end: f64, tableau: ButcherTableau) -> Self {
        Self { cfl, t_end, tableau, record_steps: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("CFL must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("end time must be finite and non-negative, got {}", self.t_end)));
        }
        Ok(())
    }
}

/// Diagnostics after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub mood_events: usize,
}

#[derive(Debug, Clone)]
pub struct IntegrationOutput {
    pub u: Vec<f64>,
    pub steps: usize,
    pub mood_events: usize,
    /// Filled only when `record_steps` is set.
    pub records: Vec<StepRecord>,
}

/// Imposed values at selected points.
#[derive(Debug, Clone, Default)]
pub struct Pinned {
    pub values: Vec<(usize, f64)>,
}

/// Advances `u0` to `t_end` with `dt = cfl * dt_euler`, truncating the last
/// step to land on `t_end`. `observer` sees the state after every step and
/// the MOOD verdicts that produced it.
#[allow(clippy::too_many_arguments)]
pub fn integrate_with(
    scheme: &dyn SpatialScheme,
    mood: Option<&Mood>,
    cloud: &PointCloud,
    u0: &[f64],
    dt_euler: f64,
    cfg: &IntegrationConfig,
    pinned: &Pinned,
    mut observer: impl FnMut(&StepRecord, &[f64], Option<&MoodReport>),
) -> Result<IntegrationOutput> {
    cfg.validate()?;
    if !(dt_euler > 0.0 && dt_euler.is_finite()) {
        return Err(Error::InvalidConfig(format!("forward-Euler step must be positive, got {dt_euler}")));
    }
    let weights = cloud.quadrature_weights();
    let dt_full = cfg.cfl * dt_euler;
    let mut u = u0.to_vec();
    for &(i, v) in &pinned.values {
        u[i] = v;
    }
    let mut next = vec![0.0; u.len()];
    let mut ws = RkWorkspace::default();
    let mut t = 0.0;
    let mut step = 0;
    let mut events = 0;
    let mut records = Vec::new();
    while t < cfg.t_end {
        let remaining = cfg.t_end - t;
        // Absorb a final sliver caused by roundoff in t.
        let dt = if remaining <= dt_full * (1.0 + 1e-12) { remaining } else { dt_full };
        let report = match mood {
            Some(m) => Some(mood_step(scheme, m, cloud, &u, dt, &cfg.tableau, &mut ws, &mut next)),
            None => {
                rk_step(scheme, &u, dt, &cfg.tableau, &mut ws, &mut next);
                None
            }
        };
        let step_events = report.as_ref().map_or(0, MoodReport::events);
        for &(i, v) in &pinned.values {
            next[i] = v;
        }
        std::mem::swap(&mut u, &mut next);
        step += 1;
        t = if dt == remaining { cfg.t_end } else { t + dt };
        events += step_events;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step, t });
        }
        let (min, max) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let rec = StepRecord {
            step,
            t,
            dt,
            mass: u.iter().zip(weights).map(|(u, w)| u * w).sum(),
            min,
            max,
            mood_events: step_events,
        };
        observer(&rec, &u, report.as_ref());
        if cfg.record_steps {
            records.push(rec);
        }
    }
    Ok(IntegrationOutput { u, steps: step, mood_events: events, records })
}

pub fn integrate(
    scheme: &dyn SpatialScheme,
    mood: Option<&Mood>,
    cloud: &PointCloud,
    u0: &[f64],
    dt_euler: f64,
    cfg: &IntegrationConfig,
) -> Result<IntegrationOutput> {
    integrate_with(scheme, mood, cloud, u0, dt_euler, cfg, &Pinned::default(), |_, _, _| {})
}

/// Writes `step,t,dt,mass,min,max,mood_events`.
pub fn write_steps_csv<W: std::io::Write>(records: &[StepRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,t,dt,mass,min,max,mood_events")?;
    for r in records {
        writeln!(w, "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}", r.step, r.t, r.dt, r.mass, r.min, r.max, r.mood_events)?;
    }
    Ok(())
}
