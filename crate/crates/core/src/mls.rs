//! Weighted moving-least-squares derivative operators.
//!
//! At every point `i` the differences `u_j - u_i` over a stencil `S_i` are
//! fitted by a Taylor polynomial of a chosen degree without constant term,
//! using Gaussian weights `w_ij = exp(-alpha |x_j - x_i|^2)`. The solution is
//! linear in the data, so it is stored as one coefficient row per derivative:
//!
//! ```text
//! d^k u_i ≈ sum_{j in S_i} c^k_ij (u_j - u_i)
//! ```
//!
//! The rows only depend on geometry and weights. Factorials are folded in,
//! so the rows approximate derivatives and not Taylor coefficients.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::pointcloud::{Neighbor, Point, PointCloud};

/// Gram matrices with a reciprocal condition number below this are rejected.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Partial-derivative orders along x and y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub x: u8,
    pub y: u8,
}

impl MultiIndex {
    pub const DX: MultiIndex = MultiIndex { x: 1, y: 0 };
    pub const DY: MultiIndex = MultiIndex { x: 0, y: 1 };
    pub const DXX: MultiIndex = MultiIndex { x: 2, y: 0 };
    pub const DXY: MultiIndex = MultiIndex { x: 1, y: 1 };
    pub const DYY: MultiIndex = MultiIndex { x: 0, y: 2 };

    pub const fn new(x: u8, y: u8) -> Self {
        Self { x, y }
    }

    pub fn order(&self) -> usize {
        (self.x + self.y) as usize
    }

    /// `x! * y!`
    pub fn factorial(&self) -> f64 {
        factorial(self.x as usize) * factorial(self.y as usize)
    }

    /// `dx^x * dy^y`
    pub fn monomial(&self, d: Point) -> f64 {
        d[0].powi(self.x as i32) * d[1].powi(self.y as i32)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Derivative multi-indices with `1 <= |d| <= degree` in graded
/// lexicographic order: `(1,0), (0,1), (2,0), (1,1), (0,2), ...`.
pub fn multi_indices(dim: usize, degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for k in 1..=degree {
        if dim == 1 {
            out.push(MultiIndex::new(k as u8, 0));
        } else {
            for x in (0..=k).rev() {
                out.push(MultiIndex::new(x as u8, (k - x) as u8));
            }
        }
    }
    out
}

/// Number of unknowns of a degree-`degree` fit.
pub fn term_count(dim: usize, degree: usize) -> usize {
    if dim == 1 {
        degree
    } else {
        degree * (degree + 3) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub alpha: f64,
}

impl WeightConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("weight decay alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn weight(&self, delta: Point) -> f64 {
        (-self.alpha * (delta[0] * delta[0] + delta[1] * delta[1])).exp()
    }
}

/// Weight between two points of a cloud.
pub fn weight(cloud: &PointCloud, i: usize, j: usize, cfg: &WeightConfig) -> f64 {
    cfg.weight(cloud.delta(i, j))
}

/// Why a single stencil could not be fitted.
#[derive(Debug, Clone, PartialEq)]
pub enum FitFailure {
    TooFewPoints { have: usize, need: usize },
    IllConditioned { rcond: f64 },
}

impl FitFailure {
    pub fn at(self, point: usize) -> Error {
        let reason = match self {
            FitFailure::TooFewPoints { have, need } => format!("{have} points, need {need}"),
            FitFailure::IllConditioned { rcond } => format!("reciprocal condition {rcond:.3e}"),
        };
        Error::SingularStencil { point, reason }
    }
}

/// Solves one weighted least-squares problem.
///
/// Returns the coefficient rows, `term_count(dim, degree)` rows of
/// `deltas.len()` entries each, row-major, in [`multi_indices`] order.
pub fn fit_stencil(
    dim: usize,
    degree: usize,
    deltas: &[Point],
    weights: &WeightConfig,
) -> std::result::Result<Vec<f64>, FitFailure> {
    let terms = multi_indices(dim, degree);
    let nt = terms.len();
    let nn = deltas.len();
    if nn < nt {
        return Err(FitFailure::TooFewPoints { have: nn, need: nt });
    }
    // Centre at x_i (deltas already are) and scale by the stencil radius.
    let h = deltas.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max);
    if h == 0.0 {
        return Err(FitFailure::IllConditioned { rcond: 0.0 });
    }
    let mut basis = DMatrix::<f64>::zeros(nt, nn);
    let mut wb = DMatrix::<f64>::zeros(nt, nn);
    for (j, d) in deltas.iter().enumerate() {
        let w = weights.weight(*d);
        let s = [d[0] / h, d[1] / h];
        for (t, mi) in terms.iter().enumerate() {
            let v = mi.monomial(s);
            basis[(t, j)] = v;
            wb[(t, j)] = w * v;
        }
    }
    let gram = &wb * basis.transpose();
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let hi = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lo = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(FitFailure::IllConditioned { rcond });
    }
    let solution = gram
        .lu()
        .solve(&wb)
        .ok_or(FitFailure::IllConditioned { rcond })?;
    let mut rows = vec![0.0; nt * nn];
    for (t, mi) in terms.iter().enumerate() {
        let scale = mi.factorial() / h.powi(mi.order() as i32);
        for j in 0..nn {
            rows[t * nn + j] = solution[(t, j)] * scale;
        }
    }
    Ok(rows)
}

/// Which subset of `C_i` a fit uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StencilChoice {
    Central,
    /// Points with `a . (x_j - x_i) < 0`.
    Upwind(Point),
    Left,
    Right,
    Bottom,
    Top,
}

impl StencilChoice {
    pub fn select(&self, cloud: &PointCloud, i: usize) -> Vec<Neighbor> {
        match self {
            StencilChoice::Central => cloud.neighbors(i).to_vec(),
            StencilChoice::Upwind(a) => cloud.upwind_stencil(i, *a),
            StencilChoice::Left => cloud.directional_stencils(i).left,
            StencilChoice::Right => cloud.directional_stencils(i).right,
            StencilChoice::Bottom => cloud.directional_stencils(i).bottom,
            StencilChoice::Top => cloud.directional_stencils(i).top,
        }
    }
}

/// What to do when a stencil cannot carry the requested degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitPolicy {
    Strict,
    /// Lower the degree at that point until the fit succeeds (down to 1).
    ReduceDegree,
}

/// The fitted rows at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilFit {
    degree: usize,
    neighbors: Vec<usize>,
    deltas: Vec<Point>,
    rows: Vec<f64>,
}

impl StencilFit {
    pub fn fit(
        dim: usize,
        degree: usize,
        stencil: &[Neighbor],
        weights: &WeightConfig,
    ) -> std::result::Result<Self, FitFailure> {
        let deltas: Vec<Point> = stencil.iter().map(|n| n.delta).collect();
        let rows = fit_stencil(dim, degree, &deltas, weights)?;
        Ok(Self { degree, neighbors: stencil.iter().map(|n| n.index).collect(), deltas, rows })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    pub fn deltas(&self) -> &[Point] {
        &self.deltas
    }

    /// Row of term `t` (index into [`multi_indices`]).
    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.neighbors.len();
        &self.rows[t * n..(t + 1) * n]
    }

    pub fn term_count(&self) -> usize {
        if self.neighbors.is_empty() {
            0
        } else {
            self.rows.len() / self.neighbors.len()
        }
    }

    /// `sum_j c^t_ij (u_j - u_i)`
    pub fn apply_term(&self, t: usize, ui: f64, u: &[f64]) -> f64 {
        self.row(t)
            .iter()
            .zip(&self.neighbors)
            .map(|(c, &j)| c * (u[j] - ui))
            .sum()
    }

    /// All fitted derivatives in term order; `out` may be longer than the
    /// fitted term count, the remainder is zeroed.
    pub fn apply_all(&self, ui: f64, u: &[f64], out: &mut [f64]) {
        let n = self.neighbors.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        if n == 0 {
            return;
        }
        for (k, &j) in self.neighbors.iter().enumerate() {
            let du = u[j] - ui;
            for (t, o) in out.iter_mut().enumerate().take(self.term_count()) {
                *o += self.rows[t * n + k] * du;
            }
        }
    }
}

/// Per-point MLS rows for every derivative up to a degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeOperator {
    dim: usize,
    degree: usize,
    terms: Vec<MultiIndex>,
    fits: Vec<StencilFit>,
}

impl DerivativeOperator {
    pub fn fit(
        cloud: &PointCloud,
        choice: StencilChoice,
        degree: usize,
        weights: &WeightConfig,
        policy: FitPolicy,
    ) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidConfig("fit degree must be at least 1".into()));
        }
        let dim = cloud.dim();
        let fits = (0..cloud.len())
            .map(|i| {
                let stencil = choice.select(cloud, i);
                let mut deg = degree;
                loop {
                    match StencilFit::fit(dim, deg, &stencil, weights) {
                        Ok(f) => return Ok(f),
                        Err(e) if policy == FitPolicy::Strict || deg == 1 => return Err(e.at(i)),
                        Err(_) => deg -= 1,
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, degree, terms: multi_indices(dim, degree), fits })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[MultiIndex] {
        &self.terms
    }

    pub fn term_index(&self, d: MultiIndex) -> Option<usize> {
        self.terms.iter().position(|&t| t == d)
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    pub fn point(&self, i: usize) -> &StencilFit {
        &self.fits[i]
    }

    /// Row of derivative `d` at point `i`, `None` if not fitted there.
    pub fn row(&self, i: usize, d: MultiIndex) -> Option<&[f64]> {
        let t = self.term_index(d)?;
        let fit = &self.fits[i];
        (t < fit.term_count()).then(|| fit.row(t))
    }

    /// `sum_j c^d_ij (u_j - u_i)`; zero where `d` was not fitted.
    pub fn apply(&self, d: MultiIndex, i: usize, u: &[f64]) -> f64 {
        let Some(t) = self.term_index(d) else {
            panic!("derivative {d:?} is not part of a degree-{} operator", self.degree)
        };
        let fit = &self.fits[i];
        if t < fit.term_count() {
            fit.apply_term(t, u[i], u)
        } else {
            0.0
        }
    }

    /// Derivative `d` at every point.
    pub fn apply_field(&self, d: MultiIndex, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.apply(d, i, u)).collect()
    }

    /// CSV dump: `point,dx_order,dy_order,neighbor,coefficient` (1-based ids).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "point,dx_order,dy_order,neighbor,coefficient")?;
        for (i, fit) in self.fits.iter().enumerate() {
            for t in 0..fit.term_count() {
                let mi = self.terms[t];
                for (c, &j) in fit.row(t).iter().zip(fit.neighbors()) {
                    writeln!(w, "{},{},{},{},{:.16e}", i + 1, mi.x, mi.y, j + 1, c)?;
                }
            }
        }
        Ok(())
    }
}
