//! Study drivers: convergence, Dirichlet boundary, mass conservation,
//! efficiency and long-run stability, plus error norms and CSV/plot output.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mls::{DerivativeOperator, StencilChoice};
use crate::mood::{CurvatureSource, MoodConfig};
use crate::pointcloud::{generate_grid, Domain, GridGenConfig, Point, PointCloud};
use crate::schemes::{SchemeContext, SchemeId, SpatialScheme};
use crate::seeds::derive_seed;
use crate::timeint::{integrate_with, ButcherTableau, IntegrationConfig, Mood, Pinned, StepRecord};
use crate::Parameters;

/// Runs whose relative error exceeds this are counted as unstable.
pub const UNSTABLE_ERROR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `exp(-x^2)`.
    Gauss1d,
    /// 1 for `x > 0`, else 0.
    Step1d,
    /// `exp(-x^2 - y^2)`.
    Gauss2d,
    /// 1 on `(-0.5, 0.5)^2`, else 0.
    Box2d,
    /// `left` for `x < at`, `right` otherwise.
    Shock { at: f64, left: f64, right: f64 },
}

impl InitialCondition {
    /// The step used with the Dirichlet boundary: 1 left of `x = -2`, 0 right.
    pub const DIRICHLET_SHOCK: Self = Self::Shock { at: -2.0, left: 1.0, right: 0.0 };

    pub fn dim(&self) -> usize {
        match self {
            Self::Gauss2d | Self::Box2d => 2,
            _ => 1,
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            Self::Gauss1d => (-p[0] * p[0]).exp(),
            Self::Step1d => f64::from(u8::from(p[0] > 0.0)),
            Self::Gauss2d => (-p[0] * p[0] - p[1] * p[1]).exp(),
            Self::Box2d => f64::from(u8::from(p[0].abs() < 0.5 && p[1].abs() < 0.5)),
            Self::Shock { at, left, right } => {
                if p[0] < at {
                    left
                } else {
                    right
                }
            }
        }
    }

    /// Solution at time `t`: the initial value at the foot of the
    /// characteristic, wrapped on periodic axes. The shift is reduced modulo
    /// the period first, so whole periods map every point to itself exactly.
    pub fn exact(&self, p: Point, velocity: Point, t: f64, domain: &Domain) -> f64 {
        let mut foot = p;
        for axis in 0..domain.dim() {
            let mut shift = velocity[axis] * t;
            if domain.is_periodic(axis) {
                shift %= domain.length(axis);
            }
            foot[axis] -= shift;
        }
        self.eval(domain.wrap(foot))
    }

    pub fn sample(&self, cloud: &PointCloud) -> Vec<f64> {
        cloud.positions().iter().map(|&p| self.eval(p)).collect()
    }

    pub fn sample_exact(&self, cloud: &PointCloud, velocity: Point, t: f64) -> Vec<f64> {
        cloud.positions().iter().map(|&p| self.exact(p, velocity, t, cloud.domain())).collect()
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gauss1d => f.write_str("gauss1d"),
            Self::Step1d => f.write_str("step1d"),
            Self::Gauss2d => f.write_str("gauss2d"),
            Self::Box2d => f.write_str("box2d"),
            Self::Shock { at, left, right } => write!(f, "shock({at},{left},{right})"),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss1d" => Ok(Self::Gauss1d),
            "step1d" => Ok(Self::Step1d),
            "gauss2d" => Ok(Self::Gauss2d),
            "box2d" => Ok(Self::Box2d),
            "shock1d" => Ok(Self::DIRICHLET_SHOCK),
            _ => Err(Error::InvalidConfig(format!("unknown initial condition `{s}`"))),
        }
    }
}

/// `|u - exact|_2 / |exact|_2` over all points. Falls back to the absolute
/// norm, flagged by `false`, when the exact solution vanishes.
pub fn error_rel_l2(u: &[f64], exact: &[f64]) -> (f64, bool) {
    let diff = u.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        (diff / norm, true)
    } else {
        (diff, false)
    }
}

/// First-order quadrature `sum_i w_i u_i`.
pub fn total_mass(u: &[f64], cloud: &PointCloud) -> f64 {
    u.iter().zip(cloud.quadrature_weights()).map(|(u, w)| u * w).sum()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of `log(error)` against `log(n)` over the three finest grids.
/// The observed order of accuracy is its negative.
pub fn convergence_slope(n: &[usize], err: &[f64]) -> Option<f64> {
    if n.len() < 2 || n.len() != err.len() || err.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let mut pairs: Vec<(usize, f64)> = n.iter().copied().zip(err.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    let tail = &pairs[pairs.len().saturating_sub(3)..];
    let x: Vec<f64> = tail.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    Some(fit_slope(&x, &y))
}

/// A spatial scheme with its integrator, limiter flag and step fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Combo {
    pub scheme: SchemeId,
    pub tableau: ButcherTableau,
    pub mood: bool,
    pub cfl: f64,
}

impl Combo {
    pub fn new(scheme: SchemeId, tableau: ButcherTableau, mood: bool, cfl: f64) -> Self {
        Self { scheme, tableau, mood, cfl }
    }

    /// `scheme+integrator[+mood]`.
    pub fn label(&self) -> String {
        format!("{}+{}{}", self.scheme, self.tableau.name, if self.mood { "+mood" } else { "" })
    }

    /// Parses `scheme[+integrator][+mood][@cfl]`; missing parts come from the
    /// defaults.
    pub fn parse(s: &str, default_tableau: &ButcherTableau, default_cfl: f64) -> Result<Self> {
        let (body, cfl) = match s.split_once('@') {
            Some((b, c)) => (b, c.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad CFL in `{s}`")))?),
            None => (s, default_cfl),
        };
        let mut parts = body.split('+');
        let scheme: SchemeId = parts.next().unwrap_or_default().parse()?;
        let mut tableau = default_tableau.clone();
        let mut mood = false;
        for p in parts {
            if p == "mood" {
                mood = true;
            } else {
                tableau = ButcherTableau::by_name(p)?;
            }
        }
        Ok(Self { scheme, tableau, mood, cfl })
    }

    /// Integrator combinations of the efficiency study.
    pub fn efficiency_table() -> Vec<Self> {
        use SchemeId::*;
        let fe = ButcherTableau::forward_euler;
        let rk2 = ButcherTableau::ralston2;
        let rk4 = ButcherTableau::rk4;
        vec![
            Self::new(Upwind1, fe(), false, 0.99),
            Self::new(Upwind2, rk2(), true, 0.3),
            Self::new(Weno2, rk2(), false, 0.7),
            Self::new(Muscl(2), rk2(), true, 0.75),
            Self::new(Muscl(4), rk4(), true, 0.7),
            Self::new(Muscl(2), rk2(), false, 0.75),
            Self::new(Muscl(4), rk4(), false, 0.7),
        ]
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.label(), self.cfl)
    }
}

/// Scheme, limiter and step bound built on one cloud.
pub struct Solver {
    pub scheme: Box<dyn SpatialScheme>,
    pub mood: Option<Mood>,
    pub dt_euler: f64,
}

impl Solver {
    pub fn new(ctx: &SchemeContext<'_>, combo: &Combo) -> Result<Self> {
        let scheme = ctx.build(combo.scheme)?;
        let fallback = ctx.fallback()?;
        let dt_euler = fallback
            .positivity_timestep()
            .ok_or_else(|| Error::InvalidConfig("fallback scheme has no positive timestep".into()))?;
        let mood = if combo.mood {
            let op = match scheme.curvature_operator() {
                Some(op) => op,
                None => std::sync::Arc::new(DerivativeOperator::fit(ctx.cloud, StencilChoice::Central, 2, &ctx.weights, ctx.policy)?),
            };
            Some(Mood { config: MoodConfig::relaxed(ctx.cloud), curvature: CurvatureSource::new(op), fallback })
        } else {
            None
        };
        Ok(Self { scheme, mood, dt_euler })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Non-finite state or error above [`UNSTABLE_ERROR`].
    Unstable,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::Unstable => "unstable",
        })
    }
}

/// Outcome of one simulation.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub u: Vec<f64>,
    pub status: RunStatus,
    pub steps: usize,
    pub mood_events: usize,
    pub setup_time: f64,
    pub wall_time: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub records: Vec<StepRecord>,
}

/// Builds the solver on `ctx`, then integrates `u0` to `t_end`. Setup and
/// integration are timed separately.
pub fn simulate(
    ctx: &SchemeContext<'_>,
    combo: &Combo,
    u0: &[f64],
    t_end: f64,
    pinned: &Pinned,
    record_steps: bool,
) -> Result<RunOutput> {
    let t0 = Instant::now();
    let solver = Solver::new(ctx, combo)?;
    let setup_time = t0.elapsed().as_secs_f64();
    let mut cfg = IntegrationConfig::new(combo.cfl, t_end, combo.tableau.clone());
    cfg.record_steps = record_steps;
    let mass_initial = total_mass(u0, ctx.cloud);
    let t1 = Instant::now();
    let res = integrate_with(solver.scheme.as_ref(), solver.mood.as_ref(), ctx.cloud, u0, solver.dt_euler, &cfg, pinned, |_, _, _| {});
    let wall_time = t1.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    match res {
        Ok(out) => Ok(RunOutput {
            mass_final: total_mass(&out.u, ctx.cloud),
            u: out.u,
            status: RunStatus::Ok,
            steps: out.steps,
            mood_events: out.mood_events,
            setup_time,
            wall_time,
            mass_initial,
            records: out.records,
        }),
        Err(Error::NonFiniteState { step, .. }) => Ok(RunOutput {
            u: vec![f64::NAN; u0.len()],
            status: RunStatus::Unstable,
            steps: step,
            mood_events: 0,
            setup_time,
            wall_time,
            mass_initial,
            mass_final: f64::NAN,
            records: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// One row of a convergence or efficiency study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub scheme: String,
    pub n: usize,
    pub randomness: f64,
    pub seed: u64,
    pub cfl: f64,
    pub t_end: f64,
    pub error_rel_l2: f64,
    pub wall_time: f64,
    pub setup_time: f64,
    pub mass_ratio: f64,
    pub mood_events: usize,
    pub status: RunStatus,
}

pub const RECORD_HEADER: &str = "scheme,N,r,seed,cfl,t_end,error_rel_l2,wall_time,setup_time,mass_ratio,mood_events,status";

pub fn write_records_csv<W: std::io::Write>(records: &[ExperimentRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.16e},{:.6e},{:.6e},{:.16e},{},{}",
            r.scheme, r.n, r.randomness, r.seed, r.cfl, r.t_end, r.error_rel_l2, r.wall_time, r.setup_time, r.mass_ratio, r.mood_events, r.status
        )?;
    }
    Ok(())
}

/// Grid family shared by the studies.
#[derive(Debug, Clone)]
pub struct GridFamily {
    pub dim: usize,
    pub randomness: f64,
    pub master_seed: u64,
    pub count: usize,
}

impl GridFamily {
    pub fn seed(&self, k: usize) -> u64 {
        derive_seed(self.master_seed, k as u64)
    }

    pub fn build(&self, n: usize, k: usize, params: &Parameters) -> Result<PointCloud> {
        generate_grid(&Domain::standard(self.dim), &GridGenConfig::new(n, self.randomness, self.seed(k)), params.h_max_factor)
    }
}

/// Runs every combo on every `(N, grid)` pair and measures the error at
/// `t_end` against the exact solution.
pub fn run_cases(
    family: &GridFamily,
    combos: &[Combo],
    init: InitialCondition,
    n_values: &[usize],
    t_end: f64,
    params: &Parameters,
) -> Result<Vec<ExperimentRecord>> {
    if init.dim() != family.dim {
        return Err(Error::InvalidConfig(format!("initial condition {init} does not match dimension {}", family.dim)));
    }
    let cases: Vec<(usize, usize)> = n_values.iter().flat_map(|&n| (0..family.count).map(move |k| (n, k))).collect();
    let rows: Vec<Vec<ExperimentRecord>> = cases
        .par_iter()
        .map(|&(n, k)| {
            let cloud = family.build(n, k, params)?;
            let ctx = SchemeContext::new(&cloud, *params)?;
            let u0 = init.sample(&cloud);
            let exact = init.sample_exact(&cloud, params.velocity, t_end);
            combos
                .iter()
                .map(|combo| {
                    let out = simulate(&ctx, combo, &u0, t_end, &Pinned::default(), false)?;
                    let (err, _) = error_rel_l2(&out.u, &exact);
                    let unstable = out.status == RunStatus::Unstable || !(err <= UNSTABLE_ERROR);
                    Ok(ExperimentRecord {
                        scheme: combo.label(),
                        n,
                        randomness: family.randomness,
                        seed: family.seed(k),
                        cfl: combo.cfl,
                        t_end,
                        error_rel_l2: err,
                        wall_time: out.wall_time,
                        setup_time: out.setup_time,
                        mass_ratio: out.mass_final / out.mass_initial,
                        mood_events: out.mood_events,
                        status: if unstable { RunStatus::Unstable } else { RunStatus::Ok },
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Mean error and timings of the stable runs of one combo at one size.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scheme: String,
    pub n: usize,
    pub mean_error: f64,
    pub mean_wall_time: f64,
    pub mean_setup_time: f64,
    pub runs: usize,
    pub unstable: usize,
}

pub fn summarize(records: &[ExperimentRecord]) -> Vec<Summary> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in records {
        if !keys.iter().any(|k| k.0 == r.scheme && k.1 == r.n) {
            keys.push((r.scheme.clone(), r.n));
        }
    }
    keys.into_iter()
        .map(|(scheme, n)| {
            let all: Vec<&ExperimentRecord> = records.iter().filter(|r| r.scheme == scheme && r.n == n).collect();
            let ok: Vec<&&ExperimentRecord> = all.iter().filter(|r| r.status == RunStatus::Ok).collect();
            let mean = |f: fn(&ExperimentRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            Summary {
                mean_error: mean(|r| r.error_rel_l2),
                mean_wall_time: mean(|r| r.wall_time),
                mean_setup_time: mean(|r| r.setup_time),
                runs: ok.len(),
                unstable: all.len() - ok.len(),
                scheme,
                n,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: std::io::Write>(rows: &[Summary], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,N,mean_error,mean_wall_time,mean_setup_time,runs,unstable")?;
    for r in rows {
        writeln!(w, "{},{},{:.16e},{:.6e},{:.6e},{},{}", r.scheme, r.n, r.mean_error, r.mean_wall_time, r.mean_setup_time, r.runs, r.unstable)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<Summary>,
    /// `(scheme, slope of log error against log N)` over the finest grids.
    pub slopes: Vec<(String, Option<f64>)>,
}

/// Convergence study; `n_values` are points per axis.
pub fn run_convergence(
    family: &GridFamily,
    combos: &[Combo],
    init: InitialCondition,
    n_values: &[usize],
    t_end: f64,
    params: &Parameters,
) -> Result<ConvergenceResult> {
    let records = run_cases(family, combos, init, n_values, t_end, params)?;
    let summary = summarize(&records);
    let slopes = combos
        .iter()
        .map(|c| {
            let label = c.label();
            let rows: Vec<&Summary> = summary.iter().filter(|s| s.scheme == label && s.runs > 0).collect();
            let n: Vec<usize> = rows.iter().map(|s| s.n).collect();
            let e: Vec<f64> = rows.iter().map(|s| s.mean_error).collect();
            (label, convergence_slope(&n, &e))
        })
        .collect();
    Ok(ConvergenceResult { records, summary, slopes })
}

pub fn write_slopes_csv<W: std::io::Write>(slopes: &[(String, Option<f64>)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,slope")?;
    for (s, p) in slopes {
        match p {
            Some(p) => writeln!(w, "{s},{p:.6}")?,
            None => writeln!(w, "{s},nan")?,
        }
    }
    Ok(())
}

/// Efficiency study: errors and integration times averaged over the grid
/// family, unstable runs excluded and counted.
pub fn run_efficiency(
    family: &GridFamily,
    combos: &[Combo],
    init: InitialCondition,
    n_values: &[usize],
    t_end: f64,
    params: &Parameters,
) -> Result<(Vec<ExperimentRecord>, Vec<Summary>)> {
    let records = run_cases(family, combos, init, n_values, t_end, params)?;
    let summary = summarize(&records);
    Ok((records, summary))
}

/// Final profile of a Dirichlet run.
#[derive(Debug, Clone)]
pub struct DirichletProfile {
    pub scheme: String,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub boundary_value: f64,
    pub finite: bool,
}

impl DirichletProfile {
    /// `max(u) - 1`.
    pub fn overshoot(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0
    }

    /// `min(u)`; negative values are undershoots.
    pub fn minimum(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct DirichletConfig {
    pub n: usize,
    pub randomness: f64,
    pub seed: u64,
    pub cfl: f64,
    pub t_end: f64,
    pub boundary_value: f64,
    pub init: InitialCondition,
}

impl Default for DirichletConfig {
    fn default() -> Self {
        Self { n: 100, randomness: 0.5, seed: 0, cfl: 1.0 / 3.0, t_end: 5.0, boundary_value: 0.5, init: InitialCondition::DIRICHLET_SHOCK }
    }
}

/// 1D run on `[-5, 5]` without periodicity; the left end point is pinned to
/// `boundary_value` and fits near both ends may drop degree.
pub fn run_dirichlet(cfg: &DirichletConfig, schemes: &[SchemeId], tableau: &ButcherTableau, mood: bool, params: &Parameters) -> Result<Vec<DirichletProfile>> {
    let domain = Domain::bounded_1d(-5.0, 5.0);
    let cloud = generate_grid(&domain, &GridGenConfig::new(cfg.n, cfg.randomness, cfg.seed), params.h_max_factor)?;
    // The lower end point keeps index 0 and is not perturbed.
    let mut mask = vec![false; cloud.len()];
    mask[0] = true;
    let ctx = SchemeContext::new(&cloud, *params)?.with_pinned(mask);
    let pinned = Pinned { values: vec![(0, cfg.boundary_value)] };
    let u0 = cfg.init.sample(&cloud);
    schemes
        .iter()
        .map(|&id| {
            let use_mood = mood && !matches!(id, SchemeId::Upwind1 | SchemeId::Weno2 | SchemeId::Positive2d);
            let combo = Combo::new(id, tableau.clone(), use_mood, cfg.cfl);
            let out = simulate(&ctx, &combo, &u0, cfg.t_end, &pinned, false)?;
            Ok(DirichletProfile {
                scheme: combo.label(),
                x: cloud.positions().iter().map(|p| p[0]).collect(),
                finite: out.status == RunStatus::Ok,
                boundary_value: out.u[0],
                u: out.u,
            })
        })
        .collect()
}

pub fn write_profiles_csv<W: std::io::Write>(profiles: &[DirichletProfile], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,x,u")?;
    for p in profiles {
        for (x, u) in p.x.iter().zip(&p.u) {
            writeln!(w, "{},{:.16e},{:.16e}", p.scheme, x, u)?;
        }
    }
    Ok(())
}

/// Normalised mass `m(t) / m(0)` after every step.
#[derive(Debug, Clone)]
pub struct MassSeries {
    pub scheme: String,
    pub t: Vec<f64>,
    pub ratio: Vec<f64>,
    pub finite: bool,
}

impl MassSeries {
    pub fn final_ratio(&self) -> f64 {
        self.ratio.last().copied().unwrap_or(1.0)
    }
}

/// Long run on one periodic 1D grid, tracking the mass of each combo.
pub fn run_conservation(
    n: usize,
    randomness: f64,
    seed: u64,
    combos: &[Combo],
    init: InitialCondition,
    t_end: f64,
    params: &Parameters,
) -> Result<Vec<MassSeries>> {
    let cloud = generate_grid(&Domain::standard(init.dim()), &GridGenConfig::new(n, randomness, seed), params.h_max_factor)?;
    let ctx = SchemeContext::new(&cloud, *params)?;
    let u0 = init.sample(&cloud);
    combos
        .par_iter()
        .map(|combo| {
            let out = simulate(&ctx, combo, &u0, t_end, &Pinned::default(), true)?;
            let mut t = vec![0.0];
            let mut ratio = vec![1.0];
            for r in &out.records {
                t.push(r.t);
                ratio.push(r.mass / out.mass_initial);
            }
            Ok(MassSeries { scheme: combo.label(), t, ratio, finite: out.status == RunStatus::Ok })
        })
        .collect()
}

/// Writes every `stride`-th sample and the last one.
pub fn write_mass_csv<W: std::io::Write>(series: &[MassSeries], stride: usize, mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,t,mass_ratio")?;
    let stride = stride.max(1);
    for s in series {
        let last = s.t.len().saturating_sub(1);
        for k in (0..s.t.len()).filter(|k| k % stride == 0 || *k == last) {
            writeln!(w, "{},{:.16e},{:.16e}", s.scheme, s.t[k], s.ratio[k])?;
        }
    }
    Ok(())
}

/// Number of grids on which each combo stays finite and bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRunRow {
    pub scheme: String,
    pub stable: usize,
    pub total: usize,
}

impl LongRunRow {
    pub fn stable_fraction(&self) -> f64 {
        self.stable as f64 / self.total as f64
    }
}

/// Long simulations on a grid family; a run counts as stable when it stays
/// finite and its relative error is at most [`UNSTABLE_ERROR`].
pub fn run_longrun(
    family: &GridFamily,
    combos: &[Combo],
    init: InitialCondition,
    n: usize,
    t_end: f64,
    params: &Parameters,
) -> Result<Vec<LongRunRow>> {
    let records = run_cases(family, combos, init, &[n], t_end, params)?;
    Ok(combos
        .iter()
        .map(|c| {
            let label = c.label();
            let rows: Vec<&ExperimentRecord> = records.iter().filter(|r| r.scheme == label).collect();
            LongRunRow { stable: rows.iter().filter(|r| r.status == RunStatus::Ok).count(), total: rows.len(), scheme: label }
        })
        .collect())
}

pub fn write_longrun_csv<W: std::io::Write>(rows: &[LongRunRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,stable,total,stable_fraction")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.scheme, r.stable, r.total, r.stable_fraction())?;
    }
    Ok(())
}

/// Gnuplot scripts for the study outputs.
pub mod plots {
    pub fn convergence(csv: &str) -> String {
        format!(
            "set datafile separator ','\nset logscale xy\nset xlabel 'N'\nset ylabel 'relative L2 error'\nset key outside\n\
             schemes = system(\"tail -n +2 {csv} | cut -d, -f1 | sort -u\")\n\
             plot for [s in schemes] '{csv}' using (strcol(1) eq s ? $2 : 1/0):3 with linespoints title s\n"
        )
    }

    pub fn spectrum(csv: &str) -> String {
        format!(
            "set datafile separator ','\nset xlabel 'Re'\nset ylabel 'Im'\nset key outside\n\
             schemes = system(\"tail -n +2 {csv} | cut -d, -f1 | sort -u\")\n\
             plot for [s in schemes] '{csv}' using (strcol(1) eq s ? $2 : 1/0):3 with points title s\n"
        )
    }

    pub fn mass(csv: &str) -> String {
        format!(
            "set datafile separator ','\nset xlabel 't'\nset ylabel 'm(t)/m(0)'\nset key outside\n\
             schemes = system(\"tail -n +2 {csv} | cut -d, -f1 | sort -u\")\n\
             plot for [s in schemes] '{csv}' using (strcol(1) eq s ? $2 : 1/0):3 with lines title s\n"
        )
    }

    pub fn efficiency(csv: &str) -> String {
        format!(
            "set datafile separator ','\nset logscale xy\nset xlabel 'wall time [s]'\nset ylabel 'relative L2 error'\nset key outside\n\
             schemes = system(\"tail -n +2 {csv} | cut -d, -f1 | sort -u\")\n\
             plot for [s in schemes] '{csv}' using (strcol(1) eq s ? $4 : 1/0):3 with linespoints title s\n"
        )
    }

    pub fn profiles(csv: &str) -> String {
        format!(
            "set datafile separator ','\nset xlabel 'x'\nset ylabel 'u'\nset key outside\n\
             schemes = system(\"tail -n +2 {csv} | cut -d, -f1 | sort -u\")\n\
             plot for [s in schemes] '{csv}' using (strcol(1) eq s ? $2 : 1/0):3 with linespoints title s\n"
        )
    }
}
