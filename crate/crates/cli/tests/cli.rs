use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn meshless(dir: &Path, args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_meshless"));
    c.args(args).arg("--out").arg(dir).env_remove("MESHLESS_SEED");
    c
}

fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = meshless(dir, args).output().unwrap();
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest_value(dir: &Path, key: &str) -> String {
    read(dir, "manifest.txt")
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in manifest"))
}

/// Drops the timing columns of an experiment-record CSV.
fn without_timings(csv: &str) -> Vec<String> {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| header[i] != "wall_time" && header[i] != "setup_time").collect();
    csv.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| f[i]).collect::<Vec<_>>().join(",")
        })
        .collect()
}

#[test]
fn single_run_writes_records_and_manifest() {
    let tmp = TempDir::new().unwrap();
    run_ok(tmp.path(), &["run", "--n", "50", "--t-end", "0.5", "--schemes", "muscl4+rk4+mood"]);
    let run = read(tmp.path(), "run.csv");
    let mut lines = run.lines();
    assert_eq!(lines.next().unwrap(), meshless::experiments::RECORD_HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "muscl4+rk4+mood");
    assert_eq!(row[11], "ok");
    assert!(read(tmp.path(), "steps.csv").starts_with("step,t,dt,mass,min,max,mood_events\n"));
    assert_eq!(read(tmp.path(), "solution.csv").lines().count(), 51);
    assert_eq!(manifest_value(tmp.path(), "seed"), "0");
    assert_eq!(manifest_value(tmp.path(), "h_max_factor"), "3.5");
}

#[test]
fn convergence_is_reproducible_apart_from_timings() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["convergence", "--n", "40,60,80", "--t-end", "0.3", "--schemes", "upwind1,muscl2+mood", "--seed", "11"];
    run_ok(a.path(), &args);
    run_ok(b.path(), &args);
    assert!(a.path().join("convergence.plt").exists());
    assert_eq!(read(a.path(), "slopes.csv"), read(b.path(), "slopes.csv"));
    let ra = read(a.path(), "convergence_records.csv");
    assert_eq!(ra.lines().count(), 1 + 3 * 2);
    assert_eq!(without_timings(&ra), without_timings(&read(b.path(), "convergence_records.csv")));
    assert!(read(a.path(), "convergence.csv").starts_with("scheme,N,mean_error,"));
}

#[test]
fn seed_precedence_is_flag_env_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "seed = 3\n[grid]\nn = [30]\n[run]\nt_end = 0.1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = tmp.path().join("o");
    run_ok(&out, &["run", "--config", cfg]);
    assert_eq!(manifest_value(&out, "seed"), "3");
    assert_eq!(manifest_value(&out, "n"), "30");
    let status = meshless(&out, &["run", "--config", cfg]).env("MESHLESS_SEED", "5").status().unwrap();
    assert!(status.success());
    assert_eq!(manifest_value(&out, "seed"), "5");
    let status = meshless(&out, &["run", "--config", cfg, "--seed", "9"]).env("MESHLESS_SEED", "5").status().unwrap();
    assert!(status.success());
    assert_eq!(manifest_value(&out, "seed"), "9");
}

#[test]
fn configuration_errors_exit_nonzero_without_output() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\npoints = 3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["run", "--config", bad.to_str().unwrap()],
        vec!["run", "--cfl", "2"],
        vec!["run", "--schemes", "muscl0"],
        vec!["spectrum", "--schemes", "weno2"],
        vec!["run", "--flux", "1"],
    ];
    for args in cases {
        let out = tmp.path().join("never");
        let status = meshless(&out, &args).status().unwrap();
        assert_eq!(status.code(), Some(2), "{args:?}");
        assert!(!out.join("manifest.txt").exists());
    }
}

#[test]
fn help_lists_flags_with_defaults() {
    let out = Command::new(env!("CARGO_BIN_EXE_meshless")).args(["run", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--seed", "--jobs", "--h-max-factor", "--weno-eps", "--alpha", "--velocity", "--cfl", "--config"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    assert!(text.contains("3.5") && text.contains("1e-6") && text.contains("sqrt(34)"));
}

#[test]
fn spectrum_and_sensitivity_outputs() {
    let tmp = TempDir::new().unwrap();
    run_ok(tmp.path(), &["spectrum", "--n", "40", "--schemes", "upwind1,muscl2"]);
    let spec = read(tmp.path(), "spectrum.csv");
    assert!(spec.starts_with("scheme,re,im,dt\n"));
    assert_eq!(spec.lines().count(), 1 + 2 * 40);
    assert!(read(tmp.path(), "rk_boundary.csv").starts_with("order,re,im\n"));
    assert!(tmp.path().join("spectrum.plt").exists());

    run_ok(tmp.path(), &["sensitivity", "--n", "30,40", "--randomness", "0.3,0.5", "--grids", "3", "--schemes", "upwind1,muscl2"]);
    let sens = read(tmp.path(), "sensitivity.csv");
    assert!(sens.starts_with("scheme,N,r,pct_unstable\n"));
    assert_eq!(sens.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn dirichlet_conservation_and_longrun_outputs() {
    let tmp = TempDir::new().unwrap();
    run_ok(tmp.path(), &["dirichlet", "--n", "50", "--t-end", "1"]);
    let prof = read(tmp.path(), "profiles.csv");
    assert!(prof.starts_with("scheme,x,u\n"));
    assert_eq!(prof.lines().count(), 1 + 3 * 50);
    // The pinned point keeps its value in every profile.
    assert_eq!(prof.lines().filter(|l| l.contains(",-5.0000000000000000e0,5.0000000000000000e-1")).count(), 3);

    run_ok(tmp.path(), &["conservation", "--n", "50", "--t-end", "2", "--schemes", "upwind1,weno2", "--stride", "5"]);
    let mass = read(tmp.path(), "mass.csv");
    assert!(mass.starts_with("scheme,t,mass_ratio\n"));
    assert!(mass.lines().nth(1).unwrap().ends_with(",1.0000000000000000e0"));

    run_ok(tmp.path(), &["longrun", "--n", "12", "--grids", "2", "--t-end", "0.5", "--schemes", "muscl2,positive2d+fe"]);
    assert_eq!(read(tmp.path(), "longrun.csv").lines().count(), 3);
}

#[test]
fn efficiency_defaults_to_the_study_table() {
    let tmp = TempDir::new().unwrap();
    run_ok(tmp.path(), &["efficiency", "--n", "30,46", "--grids", "2", "--t-end", "0.2", "--jobs", "2"]);
    let rec = read(tmp.path(), "efficiency_records.csv");
    assert_eq!(rec.lines().count(), 1 + 7 * 2 * 2);
    assert!(rec.contains("muscl4+rk4+mood,30,"));
    assert!(read(tmp.path(), "efficiency.plt").contains("efficiency.csv"));
    assert_eq!(manifest_value(tmp.path(), "jobs"), "2");
}
