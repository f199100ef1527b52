//! Linear stability of the semi-discrete operators.
//!
//! A linear scheme is assembled column by column from unit vectors into the
//! dense matrix `L` of `du/dt = L u`. The scheme is declared unstable when
//! any eigenvalue of `L` has real part above [`INSTABILITY_THRESHOLD`].

use nalgebra::Complex;
use rayon::prelude::*;

use crate::eigen::{self, Dense};
use crate::error::{Error, Result};
use crate::pointcloud::{generate_grid, Domain, GridGenConfig};
use crate::schemes::{SchemeContext, SchemeId, SpatialScheme};
use crate::seeds::derive_seed;
use crate::timeint::ButcherTableau;
use crate::Parameters;

pub const INSTABILITY_THRESHOLD: f64 = 1e-13;

/// Dense operator with `column j = L e_j`.
pub fn assemble(scheme: &dyn SpatialScheme, n: usize) -> Result<Dense> {
    if !scheme.is_linear() {
        return Err(Error::Unsupported { scheme: scheme.id().to_string(), what: "matrix assembly (nonlinear)".into() });
    }
    let mut m = Dense::zeros(n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        scheme.evaluate(&e, &mut col);
        for (i, v) in col.iter().enumerate() {
            m.set(i, j, *v);
        }
        e[j] = 0.0;
    }
    Ok(m)
}

/// Largest absolute row sum of `L`; zero up to roundoff for schemes that
/// preserve constants.
pub fn max_row_sum(m: &Dense) -> f64 {
    (0..m.n()).map(|i| m.row(i).iter().sum::<f64>().abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub scheme: SchemeId,
    pub seed: u64,
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_real: f64,
    pub unstable: bool,
}

impl SpectrumReport {
    pub fn new(scheme: SchemeId, seed: u64, eigenvalues: Vec<Complex<f64>>) -> Self {
        let max_real = eigenvalues.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        Self { scheme, seed, eigenvalues, max_real, unstable: max_real > INSTABILITY_THRESHOLD }
    }
}

/// Assembles `scheme` and computes its full spectrum. Constants are
/// preserved by every scheme, so the ones vector is deflated as an exact
/// eigenvector with eigenvalue zero.
pub fn spectrum(scheme: &dyn SpatialScheme, n: usize, seed: u64) -> Result<SpectrumReport> {
    let m = assemble(scheme, n)?;
    Ok(SpectrumReport::new(scheme.id(), seed, eigen::eigenvalues_deflated(&m, &vec![1.0; n])?))
}

/// Negative real root of `|R(x)| = 1`, the left end of the real stability
/// interval.
pub fn real_axis_limit(tab: &ButcherTableau) -> f64 {
    let g = |x: f64| tab.amplification(Complex::new(x, 0.0)).norm() - 1.0;
    let step = 1e-2;
    let mut hi = -step;
    while g(hi - step) <= 0.0 {
        hi -= step;
        assert!(hi > -100.0, "stability interval does not close");
    }
    bisect(g, hi - step, hi)
}

/// Root of `g` in `[a, b]` with `g(a) > 0 >= g(b)` (or the reverse).
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Boundary `|R(z)| = 1` of the stability region, traced along `rays`
/// equally spaced rays from the midpoint of the real stability interval.
pub fn rk_stability_boundary(tab: &ButcherTableau, rays: usize) -> Vec<Complex<f64>> {
    let center = 0.5 * real_axis_limit(tab);
    let step = 1e-2;
    (0..rays)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / rays as f64;
            let dir = Complex::new(th.cos(), th.sin());
            let g = |r: f64| tab.amplification(Complex::new(center, 0.0) + dir * r).norm() - 1.0;
            let mut r = 0.0;
            while g(r + step) <= 0.0 {
                r += step;
            }
            Complex::new(center, 0.0) + dir * bisect(g, r + step, r)
        })
        .collect()
}

/// Settings of a grid-sensitivity study.
#[derive(Debug, Clone)]
pub struct SensitivityConfig {
    pub schemes: Vec<SchemeId>,
    pub n_values: Vec<usize>,
    /// Perturbation amplitudes as fractions of the base spacing.
    pub randomness: Vec<f64>,
    pub grids: usize,
    pub master_seed: u64,
    pub params: Parameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub scheme: SchemeId,
    pub n: usize,
    pub randomness: f64,
    pub unstable: usize,
    pub total: usize,
}

impl SensitivityRow {
    pub fn percent_unstable(&self) -> f64 {
        100.0 * self.unstable as f64 / self.total as f64
    }
}

/// Fraction of random 1D grids on which each scheme is linearly unstable.
/// Grid `k` uses seed `derive_seed(master_seed, k)` for every `N` and `r`.
pub fn sensitivity_study(cfg: &SensitivityConfig) -> Result<Vec<SensitivityRow>> {
    for s in &cfg.schemes {
        if !s.is_linear() {
            return Err(Error::Unsupported { scheme: s.to_string(), what: "linear stability analysis".into() });
        }
    }
    let domain = Domain::standard(1);
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        for &r in &cfg.randomness {
            let flags: Vec<Vec<bool>> = (0..cfg.grids)
                .into_par_iter()
                .map(|k| -> Result<Vec<bool>> {
                    let seed = derive_seed(cfg.master_seed, k as u64);
                    let cloud = generate_grid(&domain, &GridGenConfig::new(n, r, seed), cfg.params.h_max_factor)?;
                    let ctx = SchemeContext::new(&cloud, cfg.params)?;
                    cfg.schemes
                        .iter()
                        .map(|&id| Ok(spectrum(ctx.build(id)?.as_ref(), n, seed)?.unstable))
                        .collect()
                })
                .collect::<Result<_>>()?;
            for (s, &id) in cfg.schemes.iter().enumerate() {
                rows.push(SensitivityRow {
                    scheme: id,
                    n,
                    randomness: r,
                    unstable: flags.iter().filter(|f| f[s]).count(),
                    total: cfg.grids,
                });
            }
        }
    }
    Ok(rows)
}

/// `scheme,re,im,dt`.
pub fn write_spectrum_csv<W: std::io::Write>(reports: &[(SpectrumReport, f64)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,re,im,dt")?;
    for (r, dt) in reports {
        for z in &r.eigenvalues {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e}", r.scheme, z.re, z.im, dt)?;
        }
    }
    Ok(())
}

/// `scheme,N,r,pct_unstable`.
pub fn write_sensitivity_csv<W: std::io::Write>(rows: &[SensitivityRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scheme,N,r,pct_unstable")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.scheme, r.n, r.randomness, r.percent_unstable())?;
    }
    Ok(())
}

/// `order,re,im`.
pub fn write_rk_boundary_csv<W: std::io::Write>(orders: &[usize], rays: usize, mut w: W) -> std::io::Result<()> {
    writeln!(w, "order,re,im")?;
    for &order in orders {
        let tab = ButcherTableau::of_order(order).map_err(std::io::Error::other)?;
        for z in rk_stability_boundary(&tab, rays) {
            writeln!(w, "{},{:.16e},{:.16e}", order, z.re, z.im)?;
        }
    }
    Ok(())
}
