//! Runs a resolved [`RunSpec`] and writes its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use meshless::experiments::{
    error_rel_l2, plots, run_conservation, run_convergence, run_dirichlet, run_efficiency, run_longrun, simulate, write_longrun_csv,
    write_mass_csv, write_profiles_csv, write_records_csv, write_slopes_csv, write_summary_csv, DirichletConfig, ExperimentRecord,
    GridFamily, RunStatus, UNSTABLE_ERROR,
};
use meshless::pointcloud::write_grid_csv;
use meshless::stability::{sensitivity_study, spectrum, write_rk_boundary_csv, write_sensitivity_csv, write_spectrum_csv, SensitivityConfig};
use meshless::timeint::{write_steps_csv, Pinned};
use meshless::SchemeContext;

use crate::config::{Command, RunSpec};

#[derive(Debug)]
pub enum RunError {
    Io { path: PathBuf, source: std::io::Error },
    Core(meshless::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<meshless::Error> for RunError {
    fn from(e: meshless::Error) -> Self {
        RunError::Core(e)
    }
}

/// Collects the files written by one command.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let io = |source| RunError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        self.write(name, |w| w.write_all(body.as_bytes()))
    }
}

pub fn execute(spec: &RunSpec) -> Result<(), RunError> {
    let mut out = Outputs::new(&spec.out)?;
    match spec.command {
        Command::Run => single_run(spec, &mut out)?,
        Command::Convergence => convergence(spec, &mut out)?,
        Command::Efficiency => efficiency(spec, &mut out)?,
        Command::Spectrum => spectra(spec, &mut out)?,
        Command::Sensitivity => sensitivity(spec, &mut out)?,
        Command::Dirichlet => dirichlet(spec, &mut out)?,
        Command::Conservation => conservation(spec, &mut out)?,
        Command::Longrun => longrun(spec, &mut out)?,
    }
    let mut manifest = format!("meshless {}\n", env!("CARGO_PKG_VERSION"));
    manifest.push_str(&spec.describe());
    manifest.push_str(&format!("outputs = {}\n", out.written.join(",")));
    out.text("manifest.txt", &manifest)
}

fn family(spec: &RunSpec) -> GridFamily {
    GridFamily { dim: spec.dim, randomness: spec.randomness[0], master_seed: spec.seed, count: spec.grids }
}

fn single_run(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let fam = family(spec);
    let n = spec.n[0];
    let cloud = fam.build(n, 0, &spec.params)?;
    let ctx = SchemeContext::new(&cloud, spec.params)?;
    let combo = &spec.combos[0];
    let u0 = spec.init.sample(&cloud);
    let exact = spec.init.sample_exact(&cloud, spec.params.velocity, spec.t_end);
    let run = simulate(&ctx, combo, &u0, spec.t_end, &Pinned::default(), true)?;
    let (err, _) = error_rel_l2(&run.u, &exact);
    let unstable = run.status == RunStatus::Unstable || !(err <= UNSTABLE_ERROR);
    let record = ExperimentRecord {
        scheme: combo.label(),
        n,
        randomness: fam.randomness,
        seed: fam.seed(0),
        cfl: combo.cfl,
        t_end: spec.t_end,
        error_rel_l2: err,
        wall_time: run.wall_time,
        setup_time: run.setup_time,
        mass_ratio: run.mass_final / run.mass_initial,
        mood_events: run.mood_events,
        status: if unstable { RunStatus::Unstable } else { RunStatus::Ok },
    };
    out.write("run.csv", |w| write_records_csv(std::slice::from_ref(&record), w))?;
    out.write("steps.csv", |w| write_steps_csv(&run.records, w))?;
    out.write("grid.csv", |w| write_grid_csv(&cloud, w))?;
    out.write("solution.csv", |w| {
        writeln!(w, "x,y,u,exact")?;
        for ((p, u), e) in cloud.positions().iter().zip(&run.u).zip(&exact) {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], u, e)?;
        }
        Ok(())
    })?;
    println!("{}: N={n} steps={} error={err:.6e} mood_events={} status={}", record.scheme, run.steps, run.mood_events, record.status);
    Ok(())
}

fn convergence(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let res = run_convergence(&family(spec), &spec.combos, spec.init, &spec.n, spec.t_end, &spec.params)?;
    out.write("convergence_records.csv", |w| write_records_csv(&res.records, w))?;
    out.write("convergence.csv", |w| write_summary_csv(&res.summary, w))?;
    out.write("slopes.csv", |w| write_slopes_csv(&res.slopes, w))?;
    out.text("convergence.plt", &plots::convergence("convergence.csv"))?;
    for (s, p) in &res.slopes {
        match p {
            Some(p) => println!("{s}: slope {p:.3}"),
            None => println!("{s}: slope n/a"),
        }
    }
    Ok(())
}

fn efficiency(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let (records, summary) = run_efficiency(&family(spec), &spec.combos, spec.init, &spec.n, spec.t_end, &spec.params)?;
    out.write("efficiency_records.csv", |w| write_records_csv(&records, w))?;
    out.write("efficiency.csv", |w| write_summary_csv(&summary, w))?;
    out.text("efficiency.plt", &plots::efficiency("efficiency.csv"))?;
    let unstable: usize = summary.iter().map(|s| s.unstable).sum();
    println!("{} runs, {unstable} unstable", records.len());
    Ok(())
}

fn spectra(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let fam = family(spec);
    let cloud = fam.build(spec.n[0], 0, &spec.params)?;
    let ctx = SchemeContext::new(&cloud, spec.params)?;
    let dt_euler = ctx.euler_timestep()?;
    let mut reports = Vec::new();
    for c in &spec.combos {
        let rep = spectrum(ctx.build(c.scheme)?.as_ref(), cloud.len(), fam.seed(0))?;
        println!("{}: max real part {:.3e}{}", c.scheme, rep.max_real, if rep.unstable { " (unstable)" } else { "" });
        reports.push((rep, c.cfl * dt_euler));
    }
    out.write("spectrum.csv", |w| write_spectrum_csv(&reports, w))?;
    out.write("rk_boundary.csv", |w| write_rk_boundary_csv(&[1, 2, 3, 4], 360, w))?;
    out.text("spectrum.plt", &plots::spectrum("spectrum.csv"))
}

fn sensitivity(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let cfg = SensitivityConfig {
        schemes: spec.combos.iter().map(|c| c.scheme).collect(),
        n_values: spec.n.clone(),
        randomness: spec.randomness.clone(),
        grids: spec.grids,
        master_seed: spec.seed,
        params: spec.params,
    };
    let rows = sensitivity_study(&cfg)?;
    for r in &rows {
        println!("{} N={} r={}: {}% unstable", r.scheme, r.n, r.randomness, r.percent_unstable());
    }
    out.write("sensitivity.csv", |w| write_sensitivity_csv(&rows, w))
}

fn dirichlet(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let cfg = DirichletConfig {
        n: spec.n[0],
        randomness: spec.randomness[0],
        seed: family(spec).seed(0),
        cfl: spec.combos[0].cfl,
        t_end: spec.t_end,
        boundary_value: spec.boundary_value,
        init: spec.init,
    };
    let ids: Vec<_> = spec.combos.iter().map(|c| c.scheme).collect();
    let mood = spec.combos.iter().any(|c| c.mood);
    let profiles = run_dirichlet(&cfg, &ids, &spec.combos[0].tableau, mood, &spec.params)?;
    for p in &profiles {
        println!("{}: overshoot {:.4e} minimum {:.4e} finite {}", p.scheme, p.overshoot(), p.minimum(), p.finite);
    }
    out.write("profiles.csv", |w| write_profiles_csv(&profiles, w))?;
    out.text("profiles.plt", &plots::profiles("profiles.csv"))
}

fn conservation(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let seed = family(spec).seed(0);
    let series = run_conservation(spec.n[0], spec.randomness[0], seed, &spec.combos, spec.init, spec.t_end, &spec.params)?;
    for s in &series {
        println!("{}: m(t_end)/m(0) = {:.6}", s.scheme, s.final_ratio());
    }
    out.write("mass.csv", |w| write_mass_csv(&series, spec.stride, w))?;
    out.text("mass.plt", &plots::mass("mass.csv"))
}

fn longrun(spec: &RunSpec, out: &mut Outputs) -> Result<(), RunError> {
    let rows = run_longrun(&family(spec), &spec.combos, spec.init, spec.n[0], spec.t_end, &spec.params)?;
    for r in &rows {
        println!("{}: stable on {}/{} grids", r.scheme, r.stable, r.total);
    }
    out.write("longrun.csv", |w| write_longrun_csv(&rows, w))
}
