//! Spatial semi-discretisations `du/dt = F(u)` of `u_t + a . grad u = 0`.
//!
//! All schemes are built once per cloud and are read-only afterwards.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mls::{DerivativeOperator, FitPolicy, MultiIndex, StencilChoice, StencilFit, WeightConfig};
use crate::params::Parameters;
use crate::pointcloud::{Neighbor, Point, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    Upwind1,
    Upwind2,
    /// Central MLS derivative of the given fit degree.
    Central(usize),
    Positive2d,
    /// MUSCL midpoint scheme of the given formal order.
    Muscl(usize),
    Weno2,
}

impl SchemeId {
    pub fn is_linear(&self) -> bool {
        !matches!(self, SchemeId::Weno2)
    }

    pub fn formal_order(&self) -> usize {
        match *self {
            SchemeId::Upwind1 | SchemeId::Positive2d => 1,
            SchemeId::Upwind2 | SchemeId::Weno2 => 2,
            SchemeId::Central(d) | SchemeId::Muscl(d) => d,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::Upwind1 => write!(f, "upwind1"),
            SchemeId::Upwind2 => write!(f, "upwind2"),
            SchemeId::Central(2) => write!(f, "central"),
            SchemeId::Central(d) => write!(f, "central{d}"),
            SchemeId::Positive2d => write!(f, "positive2d"),
            SchemeId::Muscl(m) => write!(f, "muscl{m}"),
            SchemeId::Weno2 => write!(f, "weno2"),
        }
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownScheme(s.to_string());
        let number = |rest: &str| -> Result<usize> {
            match rest.parse::<usize>() {
                Ok(m) if (1..=6).contains(&m) => Ok(m),
                _ => Err(unknown()),
            }
        };
        match s {
            "upwind1" => Ok(SchemeId::Upwind1),
            "upwind2" => Ok(SchemeId::Upwind2),
            "central" => Ok(SchemeId::Central(2)),
            "positive2d" => Ok(SchemeId::Positive2d),
            "weno2" => Ok(SchemeId::Weno2),
            _ => {
                if let Some(rest) = s.strip_prefix("muscl") {
                    number(rest).map(SchemeId::Muscl)
                } else if let Some(rest) = s.strip_prefix("central") {
                    number(rest).map(SchemeId::Central)
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

/// The contract shared by every spatial discretisation.
pub trait SpatialScheme: Send + Sync {
    fn id(&self) -> SchemeId;

    fn formal_order(&self) -> usize {
        self.id().formal_order()
    }

    /// Whether `evaluate` is linear in `u`.
    fn is_linear(&self) -> bool {
        self.id().is_linear()
    }

    /// Writes `du/dt` for the state `u` into `du`.
    fn evaluate(&self, u: &[f64], du: &mut [f64]);

    /// Central operator whose second derivatives feed the MOOD detector.
    fn curvature_operator(&self) -> Option<Arc<DerivativeOperator>> {
        None
    }
}

/// Everything needed to build schemes on one cloud.
#[derive(Debug, Clone)]
pub struct SchemeContext<'a> {
    pub cloud: &'a PointCloud,
    pub params: Parameters,
    pub weights: WeightConfig,
    /// Points whose value is imposed; their rate of change is zero.
    pub pinned: Vec<bool>,
    pub policy: FitPolicy,
}

impl<'a> SchemeContext<'a> {
    pub fn new(cloud: &'a PointCloud, params: Parameters) -> Result<Self> {
        params.validate()?;
        let weights = params.weights(cloud.dim(), cloud.dx(), cloud.h_max())?;
        Ok(Self { cloud, params, weights, pinned: vec![false; cloud.len()], policy: FitPolicy::Strict })
    }

    /// Pins points (Dirichlet data) and lets fits near the boundary drop degree.
    pub fn with_pinned(mut self, pinned: Vec<bool>) -> Self {
        assert_eq!(pinned.len(), self.cloud.len());
        self.pinned = pinned;
        self.policy = FitPolicy::ReduceDegree;
        self
    }

    pub fn velocity(&self) -> Point {
        self.params.velocity
    }

    pub fn build(&self, id: SchemeId) -> Result<Box<dyn SpatialScheme>> {
        Ok(match id {
            SchemeId::Upwind1 => Box::new(upwind_scheme(self, 1)?),
            SchemeId::Upwind2 => Box::new(upwind_scheme(self, 2)?),
            SchemeId::Central(d) => Box::new(central_scheme(self, d)?),
            SchemeId::Positive2d => Box::new(positive2d_scheme(self)?),
            SchemeId::Muscl(m) => Box::new(MusclScheme::new(self, m)?),
            SchemeId::Weno2 => Box::new(WenoScheme::new(self)?),
        })
    }

    /// The positive first-order scheme of this dimension: `upwind1` in 1D,
    /// `positive2d` in 2D.
    pub fn fallback(&self) -> Result<RowScheme> {
        if self.cloud.dim() == 1 {
            upwind_scheme(self, 1)
        } else {
            positive2d_scheme(self)
        }
    }

    /// Largest forward-Euler step for which the fallback scheme is positive.
    pub fn euler_timestep(&self) -> Result<f64> {
        self.fallback()?
            .positivity_timestep()
            .ok_or_else(|| Error::InvalidConfig("fallback scheme has no positive timestep".into()))
    }

    fn central_operator(&self, degree: usize) -> Result<DerivativeOperator> {
        DerivativeOperator::fit(self.cloud, StencilChoice::Central, degree, &self.weights, self.policy)
    }
}

/// A linear scheme in difference form `du_i = sum_j c_ij (u_j - u_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowScheme {
    id: SchemeId,
    start: Vec<usize>,
    index: Vec<usize>,
    coef: Vec<f64>,
}

impl RowScheme {
    fn from_rows(id: SchemeId, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut start = Vec::with_capacity(rows.len() + 1);
        let mut index = Vec::new();
        let mut coef = Vec::new();
        start.push(0);
        for row in rows {
            for (j, c) in row {
                index.push(j);
                coef.push(c);
            }
            start.push(index.len());
        }
        Self { id, start, index, coef }
    }

    pub fn len(&self) -> usize {
        self.start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(j, c_ij)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.index[r.clone()].iter().copied().zip(self.coef[r].iter().copied())
    }

    pub fn evaluate_at(&self, i: usize, u: &[f64]) -> f64 {
        let ui = u[i];
        self.row(i).map(|(j, c)| c * (u[j] - ui)).sum()
    }

    /// `1 / max_i sum_j max(c_ij, 0)`: forward Euler is a convex combination
    /// below this step when all `c_ij >= 0`. `None` if some coefficient is
    /// negative or every row is empty.
    pub fn positivity_timestep(&self) -> Option<f64> {
        if self.coef.iter().any(|&c| c < 0.0) {
            return None;
        }
        let max_sum = (0..self.len())
            .map(|i| self.row(i).map(|(_, c)| c).sum::<f64>())
            .fold(0.0, f64::max);
        (max_sum > 0.0).then(|| 1.0 / max_sum)
    }
}

impl SpatialScheme for RowScheme {
    fn id(&self) -> SchemeId {
        self.id
    }

    fn evaluate(&self, u: &[f64], du: &mut [f64]) {
        for (i, out) in du.iter_mut().enumerate() {
            *out = self.evaluate_at(i, u);
        }
    }
}

/// `-a . grad` rows of a fit, paired with the neighbour ids.
fn transport_row(fit: &StencilFit, a: Point, dim: usize) -> Vec<(usize, f64)> {
    let dx = fit.row(0);
    let dy = if dim == 2 { Some(fit.row(1)) } else { None };
    fit.neighbors()
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let mut c = a[0] * dx[k];
            if let Some(dy) = dy {
                c += a[1] * dy[k];
            }
            (j, -c)
        })
        .collect()
}

/// Upwind MLS scheme: degree-`degree` fit on the points with
/// `a . (x_j - x_i) < 0`. Degree one in 1D is the positive first-order
/// scheme
///
/// ```text
/// du_i/dt = -a sum_k w_ik dx_ik (u_k - u_i) / sum_k w_ik dx_ik^2
/// ```
pub fn upwind_scheme(ctx: &SchemeContext<'_>, degree: usize) -> Result<RowScheme> {
    let cloud = ctx.cloud;
    let a = ctx.velocity();
    let id = if degree == 1 { SchemeId::Upwind1 } else { SchemeId::Upwind2 };
    let rows = (0..cloud.len())
        .map(|i| {
            if ctx.pinned[i] {
                return Ok(Vec::new());
            }
            let stencil = cloud.upwind_stencil(i, a);
            if stencil.is_empty() {
                return Err(Error::EmptyUpwindStencil(i));
            }
            let fit = fit_with_policy(cloud.dim(), degree, &stencil, &ctx.weights, ctx.policy, i)?;
            Ok(transport_row(&fit, a, cloud.dim()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RowScheme::from_rows(id, rows))
}

fn fit_with_policy(
    dim: usize,
    degree: usize,
    stencil: &[Neighbor],
    weights: &WeightConfig,
    policy: FitPolicy,
    i: usize,
) -> Result<StencilFit> {
    let mut deg = degree;
    loop {
        match StencilFit::fit(dim, deg, stencil, weights) {
            Ok(f) => return Ok(f),
            Err(e) if policy == FitPolicy::Strict || deg == 1 => return Err(e.at(i)),
            Err(_) => deg -= 1,
        }
    }
}

/// Plain central scheme `-a . grad u` with the MLS gradient on `C_i`.
pub fn central_scheme(ctx: &SchemeContext<'_>, degree: usize) -> Result<RowScheme> {
    let op = ctx.central_operator(degree)?;
    let a = ctx.velocity();
    let rows = (0..op.len())
        .map(|i| if ctx.pinned[i] { Vec::new() } else { transport_row(op.point(i), a, op.dim()) })
        .collect();
    Ok(RowScheme::from_rows(SchemeId::Central(degree), rows))
}

/// Rotated first-order coefficients of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedCoefficients {
    pub theta: f64,
    pub normal: Point,
    pub tangent: Point,
    pub alpha_bar: f64,
    pub beta_bar: f64,
}

impl RotatedCoefficients {
    /// Rotates `(alpha_ij, beta_ij)` into the frame aligned with `x_j - x_i`.
    pub fn new(delta: Point, alpha: f64, beta: f64) -> Self {
        let theta = delta[1].atan2(delta[0]);
        let (s, c) = theta.sin_cos();
        let normal = [c, s];
        let tangent = [-s, c];
        Self {
            theta,
            normal,
            tangent,
            alpha_bar: normal[0] * alpha + normal[1] * beta,
            beta_bar: tangent[0] * alpha + tangent[1] * beta,
        }
    }

    /// `c_ij` in `du_i/dt = sum_j c_ij (u_j - u_i)`: upwind flux along the
    /// normal plus a diffusive tangential flux.
    pub fn update_coefficient(&self, a: Point) -> f64 {
        let an = a[0] * self.normal[0] + a[1] * self.normal[1];
        let at = a[0] * self.tangent[0] + a[1] * self.tangent[1];
        let bt = self.beta_bar * at;
        -(self.alpha_bar * (an - an.abs()) + (bt - bt.abs()))
    }
}

/// Positive first-order 2D scheme built from the degree-one central fit.
pub fn positive2d_scheme(ctx: &SchemeContext<'_>) -> Result<RowScheme> {
    if ctx.cloud.dim() != 2 {
        return Err(Error::Unsupported { scheme: "positive2d".into(), what: "one dimension".into() });
    }
    let op = ctx.central_operator(1)?;
    let a = ctx.velocity();
    let rows = (0..op.len())
        .map(|i| {
            if ctx.pinned[i] {
                return Vec::new();
            }
            let fit = op.point(i);
            let (ra, rb) = (fit.row(0), fit.row(1));
            fit.neighbors()
                .iter()
                .zip(fit.deltas())
                .enumerate()
                .map(|(k, (&j, d))| (j, RotatedCoefficients::new(*d, ra[k], rb[k]).update_coefficient(a)))
                .collect()
        })
        .collect();
    Ok(RowScheme::from_rows(SchemeId::Positive2d, rows))
}

/// Evaluates the Taylor polynomial with derivatives `derivs` (term order of
/// `terms`, factorials in `inv_fact`) at offset `h`, minus the centre value.
fn taylor_increment(terms: &[MultiIndex], inv_fact: &[f64], derivs: &[f64], h: Point, degree: usize) -> f64 {
    let mut px = [1.0; 8];
    let mut py = [1.0; 8];
    for k in 1..=degree {
        px[k] = px[k - 1] * h[0];
        py[k] = py[k - 1] * h[1];
    }
    terms
        .iter()
        .zip(inv_fact)
        .zip(derivs)
        .map(|((t, f), d)| d * f * px[t.x as usize] * py[t.y as usize])
        .sum()
}

/// MUSCL scheme with upwind midpoint reconstruction.
///
/// With one central fit of degree `m` per point,
///
/// ```text
/// du_i/dt = -2 sum_j (a . g_ij) (u_ij - u_i)
/// ```
///
/// where `g_ij` are the gradient rows and `u_ij` is the Taylor polynomial of
/// the upwind end point (all fitted derivatives) evaluated at the midpoint:
/// from `i` when `a . (x_j - x_i) > 0`, from `j` otherwise, and the average
/// of both when the projection is exactly zero.
pub struct MusclScheme {
    order: usize,
    velocity: Point,
    op: Arc<DerivativeOperator>,
    inv_fact: Vec<f64>,
    /// The same operator in difference form over the two-ring.
    rows: RowScheme,
}

impl MusclScheme {
    pub fn new(ctx: &SchemeContext<'_>, order: usize) -> Result<Self> {
        if order == 0 || order > 6 {
            return Err(Error::InvalidConfig(format!("MUSCL order must lie in 1..=6, got {order}")));
        }
        let op = Arc::new(ctx.central_operator(order)?);
        let a = ctx.velocity();
        let inv_fact: Vec<f64> = op.terms().iter().map(|t| 1.0 / t.factorial()).collect();
        let rows = muscl_rows(&op, a, &inv_fact, order, &ctx.pinned);
        Ok(Self { order, velocity: a, op, inv_fact, rows })
    }

    pub fn operator(&self) -> &DerivativeOperator {
        &self.op
    }

    /// Difference-form coefficients `du_i = sum_j c_ij (u_j - u_i)`.
    pub fn rows(&self) -> &RowScheme {
        &self.rows
    }

    /// All fitted derivatives at all points, `N x terms` row-major.
    pub fn derivatives(&self, u: &[f64]) -> Vec<f64> {
        let nt = self.op.terms().len();
        let mut out = vec![0.0; u.len() * nt];
        for (i, chunk) in out.chunks_mut(nt).enumerate() {
            self.op.point(i).apply_all(u[i], u, chunk);
        }
        out
    }

    /// Midpoint value between `i` and its `k`-th neighbour.
    pub fn midpoint_value(&self, u: &[f64], derivs: &[f64], i: usize, k: usize) -> f64 {
        let nt = self.op.terms().len();
        let terms = self.op.terms();
        let fit = self.op.point(i);
        let j = fit.neighbors()[k];
        let d = fit.deltas()[k];
        let proj = self.velocity[0] * d[0] + self.velocity[1] * d[1];
        let from_i = || u[i] + taylor_increment(terms, &self.inv_fact, &derivs[i * nt..(i + 1) * nt], [0.5 * d[0], 0.5 * d[1]], self.order);
        let from_j = || u[j] + taylor_increment(terms, &self.inv_fact, &derivs[j * nt..(j + 1) * nt], [-0.5 * d[0], -0.5 * d[1]], self.order);
        if proj > 0.0 {
            from_i()
        } else if proj < 0.0 {
            from_j()
        } else {
            0.5 * (from_i() + from_j())
        }
    }

    /// Midpoint values of every pair, aligned with each point's neighbours.
    pub fn midpoint_values(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let derivs = self.derivatives(u);
        (0..u.len())
            .map(|i| (0..self.op.point(i).neighbors().len()).map(|k| self.midpoint_value(u, &derivs, i, k)).collect())
            .collect()
    }

    /// `-2 sum_j (a . g_ij) (u_ij - u_i)` from reconstructed midpoints.
    pub fn evaluate_from_midpoints(&self, u: &[f64], du: &mut [f64]) {
        let derivs = self.derivatives(u);
        let a = self.velocity;
        for (i, out) in du.iter_mut().enumerate() {
            let fit = self.op.point(i);
            if self.rows.row(i).next().is_none() {
                *out = 0.0;
                continue;
            }
            let gx = fit.row(0);
            let mut acc = 0.0;
            for k in 0..fit.neighbors().len() {
                let g = a[0] * gx[k] + if self.op.dim() == 2 { a[1] * fit.row(1)[k] } else { 0.0 };
                acc += g * (self.midpoint_value(u, &derivs, i, k) - u[i]);
            }
            *out = -2.0 * acc;
        }
    }
}

/// Dense scratch row that remembers which columns were written.
struct SparseAccumulator {
    value: Vec<f64>,
    used: Vec<bool>,
    touched: Vec<usize>,
}

impl SparseAccumulator {
    fn new(n: usize) -> Self {
        Self { value: vec![0.0; n], used: vec![false; n], touched: Vec::new() }
    }

    fn add(&mut self, c: usize, v: f64) {
        if !self.used[c] {
            self.used[c] = true;
            self.touched.push(c);
        }
        self.value[c] += v;
    }

    /// Sorted `(column, value)` pairs; resets the scratch.
    fn drain(&mut self) -> Vec<(usize, f64)> {
        self.touched.sort_unstable();
        let row = self.touched.iter().map(|&c| (c, self.value[c])).collect();
        for &c in &self.touched {
            self.value[c] = 0.0;
            self.used[c] = false;
        }
        self.touched.clear();
        row
    }
}

/// Collects the MUSCL update as linear combinations of `u_c - u_i`.
fn muscl_rows(op: &DerivativeOperator, a: Point, inv_fact: &[f64], order: usize, pinned: &[bool]) -> RowScheme {
    let n = op.len();
    let dim = op.dim();
    let terms = op.terms();
    let mut acc = SparseAccumulator::new(n);
    // Monomial weights of the Taylor polynomial at `h`.
    let weights_at = |h: Point| -> Vec<f64> {
        let mut px = [1.0; 8];
        let mut py = [1.0; 8];
        for k in 1..=order {
            px[k] = px[k - 1] * h[0];
            py[k] = py[k - 1] * h[1];
        }
        terms.iter().zip(inv_fact).map(|(t, f)| f * px[t.x as usize] * py[t.y as usize]).collect()
    };
    let rows = (0..n)
        .map(|i| {
            if pinned[i] {
                return Vec::new();
            }
            let fit = op.point(i);
            let gx = fit.row(0);
            for (k, (&j, d)) in fit.neighbors().iter().zip(fit.deltas()).enumerate() {
                let g = -2.0 * (a[0] * gx[k] + if dim == 2 { a[1] * fit.row(1)[k] } else { 0.0 });
                if g == 0.0 {
                    continue;
                }
                let proj = a[0] * d[0] + a[1] * d[1];
                let (wi, wj) = if proj > 0.0 {
                    (g, 0.0)
                } else if proj < 0.0 {
                    (0.0, g)
                } else {
                    (0.5 * g, 0.5 * g)
                };
                if wi != 0.0 {
                    // u_ij - u_i = sum_t m_t D_t(i)
                    let m = weights_at([0.5 * d[0], 0.5 * d[1]]);
                    for (t, mt) in m.iter().enumerate().take(fit.term_count()) {
                        for (kk, &c) in fit.neighbors().iter().enumerate() {
                            acc.add(c, wi * mt * fit.row(t)[kk]);
                        }
                    }
                }
                if wj != 0.0 {
                    // u_ij - u_i = (u_j - u_i) + sum_t m_t D_t(j), where
                    // D_t(j) = sum_c r_c ((u_c - u_i) - (u_j - u_i)).
                    let fj = op.point(j);
                    let m = weights_at([-0.5 * d[0], -0.5 * d[1]]);
                    let mut self_coef = 1.0;
                    for (t, mt) in m.iter().enumerate().take(fj.term_count()) {
                        for (kk, &c) in fj.neighbors().iter().enumerate() {
                            let r = mt * fj.row(t)[kk];
                            self_coef -= r;
                            if c != i {
                                acc.add(c, wj * r);
                            }
                        }
                    }
                    acc.add(j, wj * self_coef);
                }
            }
            acc.drain()
        })
        .collect();
    RowScheme::from_rows(SchemeId::Muscl(order), rows)
}

impl SpatialScheme for MusclScheme {
    fn id(&self) -> SchemeId {
        SchemeId::Muscl(self.order)
    }

    fn evaluate(&self, u: &[f64], du: &mut [f64]) {
        self.rows.evaluate(u, du);
    }

    fn curvature_operator(&self) -> Option<Arc<DerivativeOperator>> {
        (self.order >= 2).then(|| Arc::clone(&self.op))
    }
}

/// One degree-2 sub-stencil fit of the WENO scheme; `None` when deactivated.
type SubFit = Option<StencilFit>;

/// Second-order MLS-WENO scheme.
///
/// Per axis the derivative is a convex combination of the central fit and
/// the upwind one-sided fit (the downwind side has zero linear weight):
///
/// ```text
/// beta_k = D_k / (IS_k + eps)^2,   omega_k = beta_k / sum beta
/// IS_k = ux^2 dx^2 + uxx^2 dx^4 [+ uy^2 dy^2 + uyy^2 dy^4 + uxy^2 dx^2 dy^2]
/// ```
///
/// with `D = 1/2` for both active stencils. Sub-stencils with fewer points
/// than degree-2 unknowns are deactivated.
pub struct WenoScheme {
    dim: usize,
    velocity: Point,
    eps: f64,
    spacing: f64,
    central: Vec<SubFit>,
    /// Upwind side along x and y.
    upwind: [Vec<SubFit>; 2],
    pinned: Vec<bool>,
}

/// Linear weight of the central and the upwind stencil.
pub const WENO_LINEAR_WEIGHT: f64 = 0.5;

impl WenoScheme {
    pub fn new(ctx: &SchemeContext<'_>) -> Result<Self> {
        let cloud = ctx.cloud;
        let dim = cloud.dim();
        let a = ctx.velocity();
        let fit_side = |choice: StencilChoice| -> Vec<SubFit> {
            (0..cloud.len())
                .map(|i| StencilFit::fit(dim, 2, &choice.select(cloud, i), &ctx.weights).ok())
                .collect()
        };
        let central = fit_side(StencilChoice::Central);
        let x_side = if a[0] >= 0.0 { StencilChoice::Left } else { StencilChoice::Right };
        let y_side = if a[1] >= 0.0 { StencilChoice::Bottom } else { StencilChoice::Top };
        let upwind = [
            fit_side(x_side),
            if dim == 2 { fit_side(y_side) } else { vec![None; cloud.len()] },
        ];
        for i in 0..cloud.len() {
            if ctx.pinned[i] {
                continue;
            }
            for axis in 0..dim {
                if a[axis] != 0.0 && central[i].is_none() && upwind[axis][i].is_none() {
                    return Err(Error::AllStencilsDeactivated(i));
                }
            }
        }
        Ok(Self {
            dim,
            velocity: a,
            eps: ctx.params.weno_eps,
            spacing: cloud.dx(),
            central,
            upwind,
            pinned: ctx.pinned.clone(),
        })
    }

    fn indicator(&self, d: &[f64]) -> f64 {
        let h2 = self.spacing * self.spacing;
        if self.dim == 1 {
            d[0] * d[0] * h2 + d[1] * d[1] * h2 * h2
        } else {
            // terms: ux, uy, uxx, uxy, uyy
            d[0] * d[0] * h2 + d[2] * d[2] * h2 * h2 + d[1] * d[1] * h2 + d[4] * d[4] * h2 * h2 + d[3] * d[3] * h2 * h2
        }
    }

    /// Central derivatives at `i` and their unnormalised weight.
    fn central_part(&self, u: &[f64], i: usize) -> ([f64; 5], f64) {
        let mut dc = [0.0; 5];
        match &self.central[i] {
            Some(f) => {
                f.apply_all(u[i], u, &mut dc);
                (dc, WENO_LINEAR_WEIGHT / (self.indicator(&dc) + self.eps).powi(2))
            }
            None => (dc, 0.0),
        }
    }

    fn blend_with(&self, u: &[f64], i: usize, axis: usize, dc: &[f64; 5], beta_c: f64) -> (f64, f64, f64) {
        let mut du = [0.0; 5];
        let mut beta_u = 0.0;
        if let Some(f) = &self.upwind[axis][i] {
            f.apply_all(u[i], u, &mut du);
            beta_u = WENO_LINEAR_WEIGHT / (self.indicator(&du) + self.eps).powi(2);
        }
        let total = beta_c + beta_u;
        let (wc, wu) = (beta_c / total, beta_u / total);
        (wc, wu, wc * dc[axis] + wu * du[axis])
    }

    /// Nonlinear weights `(omega_central, omega_upwind)` and the blended
    /// derivative along `axis` at point `i`.
    pub fn blend(&self, u: &[f64], i: usize, axis: usize) -> (f64, f64, f64) {
        let (dc, beta_c) = self.central_part(u, i);
        self.blend_with(u, i, axis, &dc, beta_c)
    }
}

impl SpatialScheme for WenoScheme {
    fn id(&self) -> SchemeId {
        SchemeId::Weno2
    }

    fn evaluate(&self, u: &[f64], du: &mut [f64]) {
        for (i, out) in du.iter_mut().enumerate() {
            *out = 0.0;
            if self.pinned[i] {
                continue;
            }
            let (dc, beta_c) = self.central_part(u, i);
            for axis in 0..self.dim {
                let a = self.velocity[axis];
                if a != 0.0 {
                    *out -= a * self.blend_with(u, i, axis, &dc, beta_c).2;
                }
            }
        }
    }
}
