//! Command line, config file and their resolution into a [`RunSpec`].
//!
//! Precedence for every setting: flag, then `MESHLESS_SEED` (seed only),
//! then the config file, then the per-command default.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use meshless::experiments::{Combo, InitialCondition};
use meshless::{ButcherTableau, Parameters, SchemeId};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "meshless", version, about = "Meshless GFDM schemes for linear advection on irregular point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One simulation on one grid; writes the step history and final state.
    Run,
    /// Error against the exact solution over a list of grid sizes.
    Convergence,
    /// Eigenvalues of the assembled linear operators and RK stability regions.
    Spectrum,
    /// Share of random 1D grids on which each linear scheme is unstable.
    Sensitivity,
    /// 1D shock on a bounded domain with a pinned left boundary value.
    Dirichlet,
    /// Normalised mass over a long periodic run.
    Conservation,
    /// Error against integration time, averaged over a grid family.
    Efficiency,
    /// Long 2D runs on a grid family; counts stable runs per scheme.
    Longrun,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Convergence => "convergence",
            Command::Spectrum => "spectrum",
            Command::Sensitivity => "sensitivity",
            Command::Dirichlet => "dirichlet",
            Command::Conservation => "conservation",
            Command::Efficiency => "efficiency",
            Command::Longrun => "longrun",
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file and then to the defaults of the subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML config file (sections: grid, scheme, run, params)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed of the grid family [default: 0]
    #[arg(long, global = true, env = "MESHLESS_SEED")]
    pub seed: Option<u64>,
    /// Worker threads [default: 1]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Space dimension, 1 or 2 [default: 1; 2 for longrun]
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Points per axis, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Point perturbation as a fraction of the spacing, comma separated [default: 0.5]
    #[arg(long, global = true, value_delimiter = ',')]
    pub randomness: Option<Vec<f64>>,
    /// Number of random grids per size
    #[arg(long, global = true)]
    pub grids: Option<usize>,
    /// Scheme combos `scheme[+integrator][+mood][@cfl]`, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Default integrator of the combos: fe, rk2, rk3, rk4 [default: rk3]
    #[arg(long, global = true)]
    pub integrator: Option<String>,
    /// Default step as a fraction of the forward-Euler positivity step
    #[arg(long, global = true)]
    pub cfl: Option<f64>,
    /// End time
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Initial condition: gauss1d, step1d, shock1d, gauss2d, box2d
    #[arg(long, global = true)]
    pub init: Option<String>,
    /// Advection velocity, comma separated [default: 1 (1D), 1,1 (2D)]
    #[arg(long, global = true, value_delimiter = ',')]
    pub velocity: Option<Vec<f64>>,
    /// Neighbour radius in units of the spacing [default: 3.5 (1D), sqrt(34) (2D)]
    #[arg(long, global = true)]
    pub h_max_factor: Option<f64>,
    /// WENO regulariser [default: 1e-6 (1D), 1e-12 (2D)]
    #[arg(long, global = true)]
    pub weno_eps: Option<f64>,
    /// Weight decay of the MLS weights [default: dx^-2 (1D), 6/h_max^2 (2D)]
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Keep every k-th mass sample [default: 10]
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// Imposed left boundary value of the Dirichlet run [default: 0.5]
    #[arg(long, global = true)]
    pub boundary_value: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub params: ParamsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: Option<usize>,
    pub n: Option<Vec<usize>>,
    pub randomness: Option<Vec<f64>>,
    pub grids: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub schemes: Option<Vec<String>>,
    pub integrator: Option<String>,
    pub cfl: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: Option<f64>,
    pub init: Option<String>,
    pub stride: Option<usize>,
    pub boundary_value: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub velocity: Option<Vec<f64>>,
    pub h_max_factor: Option<f64>,
    pub weno_eps: Option<f64>,
    pub alpha: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<meshless::Error> for ConfigError {
    fn from(e: meshless::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub dim: usize,
    pub n: Vec<usize>,
    pub randomness: Vec<f64>,
    pub grids: usize,
    pub combos: Vec<Combo>,
    pub t_end: f64,
    pub init: InitialCondition,
    pub params: Parameters,
    pub stride: usize,
    pub boundary_value: f64,
}

/// Per-command defaults for one dimension.
struct Defaults {
    n: Vec<usize>,
    grids: usize,
    schemes: Vec<&'static str>,
    cfl: f64,
    t_end: f64,
    init: InitialCondition,
}

fn defaults(cmd: Command, dim: usize) -> Defaults {
    use InitialCondition::*;
    let one = dim == 1;
    let smooth = if one { Gauss1d } else { Gauss2d };
    let d = |n: Vec<usize>, grids, schemes: Vec<&'static str>, cfl, t_end, init| Defaults { n, grids, schemes, cfl, t_end, init };
    match cmd {
        Command::Run => d(vec![if one { 100 } else { 30 }], 1, vec!["muscl2+mood"], if one { 0.05 } else { 0.025 }, if one { 2.5 } else { 1.0 }, smooth),
        Command::Convergence if one => d(
            vec![100, 200, 400, 800, 1600],
            1,
            vec!["upwind1", "upwind2", "weno2", "muscl2+mood", "muscl4+mood"],
            0.05,
            2.5,
            smooth,
        ),
        Command::Convergence => d(
            vec![30, 50, 70, 100],
            1,
            vec!["muscl2", "weno2", "muscl1", "muscl2+mood", "muscl1+mood", "upwind2", "positive2d+fe"],
            0.025,
            1.0,
            smooth,
        ),
        Command::Spectrum if one => d(vec![100], 1, vec!["upwind1", "upwind2", "central", "muscl1", "muscl2", "muscl3", "muscl4"], 0.125, 0.0, smooth),
        Command::Spectrum => d(vec![30], 1, vec!["upwind2", "positive2d", "muscl1", "muscl2"], 0.5, 0.0, smooth),
        Command::Sensitivity => d(vec![100, 200, 400], 100, vec!["upwind1", "upwind2", "muscl2", "muscl4"], 1.0, 0.0, smooth),
        Command::Dirichlet => d(vec![100], 1, vec!["weno2", "muscl2+mood", "muscl4+mood"], 1.0 / 3.0, 5.0, InitialCondition::DIRICHLET_SHOCK),
        Command::Conservation => d(vec![100], 1, vec!["upwind1", "muscl2", "muscl4+mood", "weno2", "muscl2+mood"], 0.25, 200.0, smooth),
        Command::Efficiency if one => d(vec![30, 46, 72, 111, 171, 264, 407, 629, 971, 1500], 10, Vec::new(), 0.5, 7.5, smooth),
        Command::Efficiency => d(vec![20, 30, 40, 50, 70], 1, vec!["positive2d+fe", "upwind2", "weno2", "muscl1+mood", "muscl2+mood", "muscl2"], 0.5, 1.0, smooth),
        Command::Longrun => d(vec![30], 50, vec!["muscl1", "muscl2", "positive2d+fe", "upwind2", "weno2"], 0.1, 30.0 * 2f64.sqrt(), Box2d),
    }
}

fn single<T: Copy>(name: &str, cmd: Command, v: &[T]) -> Result<T, ConfigError> {
    match v {
        [x] => Ok(*x),
        _ => Err(ConfigError(format!("`{}` takes exactly one value of --{name}, got {}", cmd.name(), v.len()))),
    }
}

impl RunSpec {
    /// Merges flags, environment, file and defaults, and validates the result.
    pub fn resolve(command: Command, opts: &Options, file: &FileConfig) -> Result<Self, ConfigError> {
        let default_dim = if command == Command::Longrun { 2 } else { 1 };
        let dim = opts.dim.or(file.grid.dim).unwrap_or(default_dim);
        if dim != 1 && dim != 2 {
            return Err(ConfigError(format!("dimension must be 1 or 2, got {dim}")));
        }
        if dim == 2 && matches!(command, Command::Sensitivity | Command::Dirichlet | Command::Conservation) {
            return Err(ConfigError(format!("`{}` is a 1D study", command.name())));
        }
        if dim == 1 && command == Command::Longrun {
            return Err(ConfigError("`longrun` is a 2D study".into()));
        }
        let def = defaults(command, dim);

        let n = opts.n.clone().or_else(|| file.grid.n.clone()).unwrap_or(def.n);
        if n.is_empty() || n.iter().any(|&k| k < 4) {
            return Err(ConfigError("every grid size must be at least 4 points per axis".into()));
        }
        let randomness = opts.randomness.clone().or_else(|| file.grid.randomness.clone()).unwrap_or_else(|| vec![0.5]);
        if randomness.is_empty() || randomness.iter().any(|r| !(0.0..=0.5).contains(r)) {
            return Err(ConfigError("randomness must lie in [0, 0.5]".into()));
        }
        let grids = opts.grids.or(file.grid.grids).unwrap_or(def.grids);
        if grids == 0 {
            return Err(ConfigError("at least one grid is required".into()));
        }

        let integrator = opts.integrator.clone().or_else(|| file.scheme.integrator.clone());
        let tableau = match &integrator {
            Some(name) => ButcherTableau::by_name(name)?,
            None => ButcherTableau::ssprk3(),
        };
        let cfl = opts.cfl.or(file.scheme.cfl).unwrap_or(def.cfl);
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(ConfigError(format!("CFL must lie in (0, 1], got {cfl}")));
        }
        let specs: Option<Vec<String>> = opts.schemes.clone().or_else(|| file.scheme.schemes.clone());
        let combos = match specs {
            Some(s) => s.iter().map(|c| Combo::parse(c.trim(), &tableau, cfl)).collect::<Result<Vec<_>, _>>()?,
            None if command == Command::Efficiency && dim == 1 => {
                // The study table pairs each scheme with its own integrator and
                // step; explicit settings override the whole column.
                let cfl_set = opts.cfl.or(file.scheme.cfl).is_some();
                Combo::efficiency_table()
                    .into_iter()
                    .map(|c| Combo {
                        tableau: if integrator.is_some() { tableau.clone() } else { c.tableau.clone() },
                        cfl: if cfl_set { cfl } else { c.cfl },
                        ..c
                    })
                    .collect()
            }
            None => def.schemes.iter().map(|c| Combo::parse(c, &tableau, cfl)).collect::<Result<Vec<_>, _>>()?,
        };
        if combos.is_empty() {
            return Err(ConfigError("no schemes given".into()));
        }
        for c in &combos {
            if !(c.cfl > 0.0 && c.cfl <= 1.0) {
                return Err(ConfigError(format!("CFL of `{c}` must lie in (0, 1]")));
            }
            if c.scheme == SchemeId::Positive2d && dim == 1 {
                return Err(ConfigError("positive2d is a 2D scheme".into()));
            }
        }
        if matches!(command, Command::Spectrum | Command::Sensitivity) {
            if let Some(c) = combos.iter().find(|c| !c.scheme.is_linear()) {
                return Err(ConfigError(format!("`{}` needs linear schemes; `{}` is nonlinear", command.name(), c.scheme)));
            }
        }

        let t_end = opts.t_end.or(file.run.t_end).unwrap_or(def.t_end);
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(ConfigError(format!("end time must be finite and non-negative, got {t_end}")));
        }
        let init = match opts.init.as_ref().or(file.run.init.as_ref()) {
            Some(s) => s.parse::<InitialCondition>()?,
            None => def.init,
        };
        if init.dim() != dim {
            return Err(ConfigError(format!("initial condition {init} is not {dim}D")));
        }

        let mut params = Parameters::defaults(dim);
        if let Some(v) = opts.velocity.clone().or_else(|| file.params.velocity.clone()) {
            if v.len() != dim {
                return Err(ConfigError(format!("velocity needs {dim} components, got {}", v.len())));
            }
            params.velocity = [v[0], if dim == 2 { v[1] } else { 0.0 }];
        }
        if let Some(h) = opts.h_max_factor.or(file.params.h_max_factor) {
            params.h_max_factor = h;
        }
        if let Some(e) = opts.weno_eps.or(file.params.weno_eps) {
            params.weno_eps = e;
        }
        if let Some(a) = opts.alpha.or(file.params.alpha) {
            if !(a > 0.0) {
                return Err(ConfigError(format!("alpha must be positive, got {a}")));
            }
            params.alpha = Some(a);
        }
        params.validate()?;

        let jobs = opts.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(ConfigError("--jobs must be at least 1".into()));
        }
        let stride = opts.stride.or(file.run.stride).unwrap_or(10).max(1);
        let boundary_value = opts.boundary_value.or(file.run.boundary_value).unwrap_or(0.5);

        let spec = Self {
            command,
            out: opts.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
            seed: opts.seed.or(file.seed).unwrap_or(0),
            jobs,
            dim,
            n,
            randomness,
            grids,
            combos,
            t_end,
            init,
            params,
            stride,
            boundary_value,
        };
        spec.check_arity()?;
        Ok(spec)
    }

    fn check_arity(&self) -> Result<(), ConfigError> {
        let cmd = self.command;
        if cmd != Command::Sensitivity {
            single("randomness", cmd, &self.randomness)?;
        }
        if matches!(cmd, Command::Run | Command::Spectrum | Command::Dirichlet | Command::Conservation | Command::Longrun) {
            single("n", cmd, &self.n)?;
        }
        if cmd == Command::Run && self.combos.len() != 1 {
            return Err(ConfigError("`run` takes exactly one scheme combo".into()));
        }
        Ok(())
    }

    /// `key = value` lines describing the resolved settings.
    pub fn describe(&self) -> String {
        let list = |v: Vec<String>| v.join(",");
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("command", self.command.name().into());
        kv("seed", self.seed.to_string());
        kv("jobs", self.jobs.to_string());
        kv("dim", self.dim.to_string());
        kv("n", list(self.n.iter().map(|n| n.to_string()).collect()));
        kv("randomness", list(self.randomness.iter().map(|r| r.to_string()).collect()));
        kv("grids", self.grids.to_string());
        kv("schemes", list(self.combos.iter().map(|c| c.to_string()).collect()));
        kv("t_end", self.t_end.to_string());
        kv("init", self.init.to_string());
        kv("velocity", list(p.velocity[..self.dim].iter().map(|v| v.to_string()).collect()));
        kv("h_max_factor", p.h_max_factor.to_string());
        kv("weno_eps", p.weno_eps.to_string());
        kv("alpha", p.alpha.map_or_else(|| "default".into(), |a| a.to_string()));
        kv("stride", self.stride.to_string());
        kv("boundary_value", self.boundary_value.to_string());
        s
    }
}
