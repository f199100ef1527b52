//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! Run a subset with `cargo test --release --test acceptance -- 3 7`.

use std::time::Instant;

use meshless::eigen::{self, Dense};
use meshless::experiments::{
    convergence_slope, run_conservation, run_convergence, run_dirichlet, run_longrun, Combo, DirichletConfig, GridFamily,
    InitialCondition, Solver,
};
use meshless::mls::{fit_stencil, multi_indices, WeightConfig};
use meshless::mood::local_bounds;
use meshless::pointcloud::{generate_grid, GridGenConfig};
use meshless::seeds::derive_seed;
use meshless::stability::{assemble, sensitivity_study, spectrum, SensitivityConfig};
use meshless::timeint::{integrate_with, IntegrationConfig, Pinned};
use meshless::{ButcherTableau, Domain, Parameters, SchemeContext, SchemeId, SpatialScheme};
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Master seed of every grid family in this suite.
const SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn combos(specs: &[&str], tab: &ButcherTableau, cfl: f64) -> Vec<Combo> {
    specs.iter().map(|s| Combo::parse(s, tab, cfl).unwrap()).collect()
}

fn slope_of(slopes: &[(String, Option<f64>)], label: &str) -> f64 {
    slopes.iter().find(|s| s.0 == label).and_then(|s| s.1).map_or(f64::NAN, |p| -p)
}

fn c1_convergence_1d() -> Verdict {
    let rk3 = ButcherTableau::ssprk3();
    let targets = [("upwind1", 1.0), ("upwind2", 2.0), ("weno2", 2.0), ("muscl2+mood", 2.0), ("muscl4+mood", 4.0)];
    let specs: Vec<&str> = targets.iter().map(|t| t.0).collect();
    let cs = combos(&specs, &rk3, 1.0 / 20.0);
    let fam = GridFamily { dim: 1, randomness: 0.5, master_seed: SEED, count: 1 };
    let res = run_convergence(&fam, &cs, InitialCondition::Gauss1d, &[100, 200, 400, 800, 1600], 2.5, &Parameters::defaults(1)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, (_, p)) in cs.iter().zip(targets) {
        let s = slope_of(&res.slopes, &c.label());
        pass &= (s - p).abs() <= 0.3;
        parts.push(format!("{}={s:.2}", c.scheme));
    }
    verdict(pass, format!("orders {} (target +-0.3)", parts.join(" ")))
}

fn c2_convergence_2d() -> Verdict {
    let rk3 = ButcherTableau::ssprk3();
    let cs = combos(&["muscl2", "weno2", "muscl1", "positive2d+fe"], &rk3, 1.0 / 40.0);
    let fam = GridFamily { dim: 2, randomness: 0.5, master_seed: SEED, count: 1 };
    let ns = [30, 50, 70, 100];
    let res = run_convergence(&fam, &cs, InitialCondition::Gauss2d, &ns, 1.0, &Parameters::defaults(2)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for c in &cs[..3] {
        let s = slope_of(&res.slopes, &c.label());
        pass &= (s - 2.0).abs() <= 0.35;
        parts.push(format!("{}={s:.2}", c.scheme));
    }
    let err = |n: usize| res.summary.iter().find(|s| s.scheme == cs[3].label() && s.n == n).map_or(f64::NAN, |s| s.mean_error);
    let fine = -convergence_slope(&[70, 100], &[err(70), err(100)]).unwrap_or(f64::NAN);
    pass &= fine >= 0.5;
    verdict(pass, format!("orders {} (target 2+-0.35), positive2d finest pair {fine:.2} (>= 0.5)", parts.join(" ")))
}

fn c3_positivity() -> Verdict {
    let mut worst: f64 = 0.0;
    for (dim, n) in [(1, 100), (2, 20)] {
        let params = Parameters::defaults(dim);
        for k in 0..10 {
            let seed = derive_seed(SEED, k);
            let cloud = generate_grid(&Domain::standard(dim), &GridGenConfig::new(n, 0.5, seed), params.h_max_factor).unwrap();
            let ctx = SchemeContext::new(&cloud, params).unwrap();
            let fb = ctx.fallback().unwrap();
            let dt = fb.positivity_timestep().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u: Vec<f64> = (0..cloud.len()).map(|_| rng.random::<f64>()).collect();
            let mut du = vec![0.0; u.len()];
            for _ in 0..1000 {
                fb.evaluate(&u, &mut du);
                let next: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + dt * b).collect();
                for (i, v) in next.iter().enumerate() {
                    let (lo, hi) = local_bounds(&u, &cloud, i);
                    worst = worst.max(lo - v).max(v - hi);
                }
                u = next;
            }
        }
    }
    verdict(worst <= 1e-12, format!("largest DMP violation {worst:.2e} over 20 grids x 1000 steps (tol 1e-12)"))
}

fn c4_stability_table() -> Verdict {
    let params = Parameters::defaults(1);
    let main = sensitivity_study(&SensitivityConfig {
        schemes: vec![SchemeId::Upwind1, SchemeId::Upwind2, SchemeId::Muscl(2), SchemeId::Muscl(4)],
        n_values: vec![100, 200, 400],
        randomness: vec![0.5],
        grids: 100,
        master_seed: SEED,
        params,
    })
    .unwrap();
    let odd = sensitivity_study(&SensitivityConfig {
        schemes: vec![SchemeId::Muscl(1), SchemeId::Muscl(3)],
        n_values: vec![100],
        randomness: vec![0.5],
        grids: 20,
        master_seed: SEED,
        params,
    })
    .unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &main {
        let pct = r.percent_unstable();
        pass &= match r.scheme {
            SchemeId::Muscl(4) => (0.0..=12.0).contains(&pct),
            _ => pct == 0.0,
        };
        parts.push(format!("{}@{}={pct}%", r.scheme, r.n));
    }
    for r in &odd {
        pass &= r.unstable == r.total;
        parts.push(format!("{}@{}={}/{}", r.scheme, r.n, r.unstable, r.total));
    }
    let mut uniform_max = f64::NEG_INFINITY;
    for n in [100, 200, 400] {
        let cloud = generate_grid(&Domain::standard(1), &GridGenConfig::new(n, 0.0, 0), params.h_max_factor).unwrap();
        let ctx = SchemeContext::new(&cloud, params).unwrap();
        for m in 1..=4 {
            let rep = spectrum(ctx.build(SchemeId::Muscl(m)).unwrap().as_ref(), n, 0).unwrap();
            uniform_max = uniform_max.max(rep.max_real);
        }
    }
    pass &= uniform_max <= 1e-11;
    verdict(pass, format!("{}; uniform MUSCL max_real {uniform_max:.2e} (<= 1e-11)", parts.join(" ")))
}

/// Number of points per axis of the long-run grids.
const LONGRUN_N: usize = 30;

fn c5_longrun_2d() -> Verdict {
    let rk3 = ButcherTableau::ssprk3();
    let cs = combos(&["muscl1", "muscl2", "positive2d+fe", "upwind2", "weno2"], &rk3, 0.1);
    let fam = GridFamily { dim: 2, randomness: 0.5, master_seed: SEED, count: 50 };
    let rows = run_longrun(&fam, &cs, InitialCondition::Box2d, LONGRUN_N, 30.0 * 2f64.sqrt(), &Parameters::defaults(2)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &rows {
        if r.scheme.starts_with("weno2") {
            pass &= (0.5..=0.9).contains(&r.stable_fraction());
        } else {
            pass &= r.stable == r.total;
        }
        parts.push(format!("{}={}/{}", r.scheme, r.stable, r.total));
    }
    verdict(pass, format!("stable runs on {LONGRUN_N}^2 grids: {} (weno2 needs 50%..90%)", parts.join(" ")))
}

fn c6_conservation() -> Verdict {
    let rk3 = ButcherTableau::ssprk3();
    let cs = combos(&["upwind1", "muscl2", "muscl4+mood", "weno2", "muscl2+mood"], &rk3, 0.25);
    let series = run_conservation(100, 0.5, derive_seed(SEED, 0), &cs, InitialCondition::Gauss1d, 200.0, &Parameters::defaults(1)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, s) in series.iter().enumerate() {
        let at = |t: f64| s.t.iter().position(|&x| x >= t).map_or(f64::NAN, |i| s.ratio[i]);
        let samples = [at(50.0), at(100.0), at(150.0), s.final_ratio()];
        pass &= s.finite;
        if k < 3 {
            pass &= (s.final_ratio() - 1.0).abs() < 0.05;
        } else {
            pass &= samples.windows(2).all(|w| w[1] > w[0]) && s.final_ratio() > 1.05;
        }
        parts.push(format!("{}={:.4}", s.scheme, s.final_ratio()));
    }
    verdict(pass, format!("m(200)/m(0): {}", parts.join(" ")))
}

/// Weighted least squares through a QR factorisation of the unscaled Taylor
/// system. Row `t` of the result maps differences `u_j - u_i` to the
/// derivative of term `t`.
fn qr_oracle(dim: usize, degree: usize, deltas: &[[f64; 2]], alpha: f64) -> DMatrix<f64> {
    let terms = multi_indices(dim, degree);
    let sw: Vec<f64> = deltas.iter().map(|d| (-alpha * (d[0] * d[0] + d[1] * d[1])).exp().sqrt()).collect();
    let a = DMatrix::from_fn(deltas.len(), terms.len(), |j, t| sw[j] * terms[t].monomial(deltas[j]) / terms[t].factorial());
    let qr = a.qr();
    let rhs = qr.q().transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sw));
    qr.r().solve_upper_triangular(&rhs).unwrap()
}

fn c7_mls_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut fits = 0;
    for dim in [1, 2] {
        for degree in 1..=5 {
            let nt = multi_indices(dim, degree).len();
            for _ in 0..50 {
                let scale = 10f64.powf(rng.random_range(-2.0..0.5));
                let count = 2 * nt + 4;
                let deltas: Vec<[f64; 2]> = (0..count)
                    .map(|_| loop {
                        let d: [f64; 2] = [rng.random_range(-1.0..1.0), if dim == 2 { rng.random_range(-1.0..1.0) } else { 0.0 }];
                        let r = d[0].hypot(d[1]);
                        if r > 0.05 && r <= 1.0 {
                            break [d[0] * scale, d[1] * scale];
                        }
                    })
                    .collect();
                let alpha = 1.0 / (scale * scale);
                let rows = fit_stencil(dim, degree, &deltas, &WeightConfig::new(alpha).unwrap()).unwrap();
                let oracle = qr_oracle(dim, degree, &deltas, alpha);
                for t in 0..nt {
                    let norm = (0..count).map(|j| oracle[(t, j)].abs()).fold(0.0, f64::max);
                    let diff = (0..count).map(|j| (rows[t * count + j] - oracle[(t, j)]).abs()).fold(0.0, f64::max);
                    worst = worst.max(diff / norm);
                }
                fits += 1;
            }
        }
    }
    verdict(worst <= 1e-10, format!("{fits} stencils, worst relative row difference {worst:.2e} (tol 1e-10)"))
}

fn c8_spectrum_oracle() -> Verdict {
    let params = Parameters::defaults(1);
    let n = 64;
    let cloud = generate_grid(&Domain::standard(1), &GridGenConfig::new(n, 0.0, 0), params.h_max_factor).unwrap();
    let ctx = SchemeContext::new(&cloud, params).unwrap();
    let mut dft_err: f64 = 0.0;
    for id in [SchemeId::Upwind1, SchemeId::Upwind2] {
        let m = assemble(ctx.build(id).unwrap().as_ref(), n).unwrap();
        let radius = m.norm_inf();
        let mut computed = eigen::eigenvalues(&m).unwrap();
        for k in 0..n {
            let lambda: Complex<f64> = (0..n)
                .map(|j| m.get(0, j) * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64))
                .sum();
            let (idx, d) = computed.iter().enumerate().map(|(i, z)| (i, (z - lambda).norm())).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            computed.swap_remove(idx);
            dft_err = dft_err.max(d / radius.max(1.0));
        }
    }
    let mut probe_err: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for (dim, np) in [(1, 100), (2, 12)] {
        let params = Parameters::defaults(dim);
        let cloud = generate_grid(&Domain::standard(dim), &GridGenConfig::new(np, 0.5, derive_seed(SEED, 0)), params.h_max_factor).unwrap();
        let ctx = SchemeContext::new(&cloud, params).unwrap();
        let mut ids = vec![SchemeId::Upwind1, SchemeId::Upwind2, SchemeId::Muscl(2), SchemeId::Muscl(4)];
        if dim == 2 {
            ids.push(SchemeId::Positive2d);
        }
        for id in ids {
            let s = ctx.build(id).unwrap();
            let m: Dense = assemble(s.as_ref(), cloud.len()).unwrap();
            for _ in 0..20 {
                let u: Vec<f64> = (0..cloud.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut du = vec![0.0; u.len()];
                s.evaluate(&u, &mut du);
                let mu = m.mul_vec(&u);
                let scale = du.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
                let d = mu.iter().zip(&du).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
                probe_err = probe_err.max(d / scale);
            }
        }
    }
    verdict(
        dft_err <= 1e-10 && probe_err <= 1e-12,
        format!("circulant vs DFT {dft_err:.2e} (tol 1e-10), assembled vs evaluate {probe_err:.2e} (tol 1e-12)"),
    )
}

fn c9_mood_events() -> Verdict {
    let params = Parameters::defaults(1);
    let domain = Domain::standard(1);
    let cloud = generate_grid(&domain, &GridGenConfig::new(100, 0.5, derive_seed(SEED, 0)), params.h_max_factor).unwrap();
    let ctx = SchemeContext::new(&cloud, params).unwrap();
    let u0 = InitialCondition::Step1d.sample(&cloud);
    let length = domain.length(0);
    let (dx, h) = (cloud.dx(), cloud.h_max());
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in ["muscl2+mood", "muscl4+mood"] {
        let combo = Combo::parse(spec, &ButcherTableau::ssprk3(), 1.0 / 20.0).unwrap();
        let solver = Solver::new(&ctx, &combo).unwrap();
        let dt = combo.cfl * solver.dt_euler;
        let cfg = IntegrationConfig::new(combo.cfl, 10.0 * dt, combo.tableau.clone());
        let (mut near, mut flat, mut steps) = (0, 0, 0);
        integrate_with(solver.scheme.as_ref(), solver.mood.as_ref(), &cloud, &u0, solver.dt_euler, &cfg, &Pinned::default(), |rec, _, rep| {
            steps += 1;
            let t = rec.t - rec.dt;
            for i in rep.map(|r| r.rejected().collect::<Vec<_>>()).unwrap_or_default() {
                // Jumps at x = a t and x = -5 + a t on the periodic line.
                let x = cloud.position(i)[0];
                let d = [t, t - 5.0]
                    .iter()
                    .map(|c| {
                        let r = (x - c).rem_euclid(length);
                        r.min(length - r)
                    })
                    .fold(f64::INFINITY, f64::min);
                if d <= 3.0 * dx {
                    near += 1;
                }
                if d > 2.0 * h {
                    flat += 1;
                }
            }
        })
        .unwrap();
        pass &= steps == 10 && near >= 1 && flat == 0;
        parts.push(format!("{spec}: {near} near the jumps, {flat} in flat regions"));
    }
    verdict(pass, format!("first 10 steps, {}", parts.join("; ")))
}

fn c10_dirichlet() -> Verdict {
    let cfg = DirichletConfig { seed: derive_seed(SEED, 0), ..DirichletConfig::default() };
    let ids = [SchemeId::Weno2, SchemeId::Muscl(2), SchemeId::Muscl(4)];
    let profiles = run_dirichlet(&cfg, &ids, &ButcherTableau::ssprk3(), true, &Parameters::defaults(1)).unwrap();
    let finite = profiles.iter().all(|p| p.finite && p.u.iter().all(|v| v.is_finite()));
    let pinned = profiles.iter().all(|p| p.boundary_value == cfg.boundary_value);
    let weno = profiles[0].overshoot();
    let sharp = profiles[1..].iter().all(|p| p.overshoot() <= weno + 0.02);
    let parts: Vec<String> = profiles.iter().map(|p| format!("{}={:.4}", p.scheme, p.overshoot())).collect();
    verdict(finite && pinned && sharp, format!("finite={finite} pinned={pinned} overshoot {}", parts.join(" ")))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("convergence-1d", c1_convergence_1d),
        ("convergence-2d", c2_convergence_2d),
        ("positivity", c3_positivity),
        ("stability-table", c4_stability_table),
        ("longrun-2d", c5_longrun_2d),
        ("conservation", c6_conservation),
        ("mls-oracle", c7_mls_oracle),
        ("spectrum-oracle", c8_spectrum_oracle),
        ("mood-events", c9_mood_events),
        ("dirichlet", c10_dirichlet),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let start = Instant::now();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let v = run();
        ran += 1;
        if !v.pass {
            failed += 1;
        }
        println!("{} {id:>2} {name}: {} [{:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{ran} passed in {:.1}s", ran - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
