//! A posteriori admissibility checks (MOOD).
//!
//! A candidate value at point `i` is accepted when it satisfies the local
//! discrete maximum principle over `{i} ∪ C_i`. Otherwise it may still be
//! accepted when the previous state is flat to within `delta_i^3`, or when
//! the curvatures around `i` describe a genuine smooth extremum (u2
//! detection). Curvatures are second derivatives of the previous state.

use std::sync::Arc;

use crate::mls::{DerivativeOperator, MultiIndex};
use crate::pointcloud::PointCloud;

/// Which criteria may accept a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoodMode {
    /// Discrete maximum principle only.
    StrictDmp,
    /// DMP, then the strict curvature test.
    StrictU2,
    /// DMP, then the flat-region test, then the relaxed curvature test.
    RelaxedU2,
}

#[derive(Debug, Clone)]
pub struct MoodConfig {
    pub mode: MoodMode,
    /// Per-point relaxation length (the cell size).
    pub delta: Vec<f64>,
}

impl MoodConfig {
    pub fn new(mode: MoodMode, delta: Vec<f64>) -> Self {
        assert!(delta.iter().all(|&d| d > 0.0), "MOOD cell sizes must be positive");
        Self { mode, delta }
    }

    /// Relaxed u2 detection with the cloud's cell sizes.
    pub fn relaxed(cloud: &PointCloud) -> Self {
        Self::new(MoodMode::RelaxedU2, cloud.cell_sizes().to_vec())
    }
}

/// Per-point outcome, in cascade priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    DmpOk,
    FlatRegion,
    U2Extremum,
    Rejected,
}

impl Verdict {
    pub fn accepted(self) -> bool {
        self != Verdict::Rejected
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MoodReport {
    pub verdicts: Vec<Verdict>,
}

impl MoodReport {
    pub fn all_accepted(n: usize) -> Self {
        Self { verdicts: vec![Verdict::DmpOk; n] }
    }

    pub fn rejected(&self) -> impl Iterator<Item = usize> + '_ {
        self.verdicts.iter().enumerate().filter(|(_, v)| !v.accepted()).map(|(i, _)| i)
    }

    /// Number of MOOD events (rejected points).
    pub fn events(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.accepted()).count()
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.verdicts.iter().filter(|&&v| v == verdict).count()
    }
}

/// `(min, max)` of the previous state over `{i} ∪ C_i`.
pub fn local_bounds(u_prev: &[f64], cloud: &PointCloud, i: usize) -> (f64, f64) {
    cloud
        .neighbors(i)
        .iter()
        .fold((u_prev[i], u_prev[i]), |(lo, hi), n| (lo.min(u_prev[n.index]), hi.max(u_prev[n.index])))
}

/// `min(u_i, u_j) <= candidate <= max(u_i, u_j)` over `j in C_i`.
pub fn dmp_check(u_prev: &[f64], candidate: f64, cloud: &PointCloud, i: usize) -> bool {
    let (lo, hi) = local_bounds(u_prev, cloud, i);
    lo <= candidate && candidate <= hi
}

/// `|max - min| <= delta^3` over `{i} ∪ C_i`.
pub fn flat_region_check(u_prev: &[f64], cloud: &PointCloud, i: usize, delta: f64) -> bool {
    let (lo, hi) = local_bounds(u_prev, cloud, i);
    (hi - lo).abs() <= delta * delta * delta
}

/// Signed and absolute extremes of one curvature field over `{i} ∪ C_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    pub min: f64,
    pub max: f64,
    pub abs_min: f64,
    pub abs_max: f64,
}

impl CurvatureBounds {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut b = Self { min: f64::INFINITY, max: f64::NEG_INFINITY, abs_min: f64::INFINITY, abs_max: 0.0 };
        for v in values {
            b.min = b.min.min(v);
            b.max = b.max.max(v);
            b.abs_min = b.abs_min.min(v.abs());
            b.abs_max = b.abs_max.max(v.abs());
        }
        b
    }

    pub fn around(curvature: &[f64], cloud: &PointCloud, i: usize) -> Self {
        Self::from_values(std::iter::once(curvature[i]).chain(cloud.neighbors(i).iter().map(|n| curvature[n.index])))
    }

    /// `abs_min / abs_max`, taken as 1 on an exactly flat patch.
    pub fn ratio(&self) -> f64 {
        if self.abs_max == 0.0 {
            1.0
        } else {
            self.abs_min / self.abs_max
        }
    }
}

/// Curvature test on every axis.
///
/// Strict: `min*max > 0` and `ratio >= 1/2`.
/// Relaxed: `min*max > -delta` and (`ratio >= 1/2` or `abs_max < delta`).
pub fn u2_check(bounds: &[CurvatureBounds], delta: f64, relaxed: bool) -> bool {
    bounds.iter().all(|b| {
        if relaxed {
            b.min * b.max > -delta && (b.ratio() >= 0.5 || b.abs_max < delta)
        } else {
            b.min * b.max > 0.0 && b.ratio() >= 0.5
        }
    })
}

/// Second derivatives used by the detector.
#[derive(Debug, Clone)]
pub struct CurvatureSource {
    op: Arc<DerivativeOperator>,
}

impl CurvatureSource {
    pub fn new(op: Arc<DerivativeOperator>) -> Self {
        assert!(op.degree() >= 2, "curvatures need a fit of degree two or more");
        Self { op }
    }

    /// `d2u/dx2` (and `d2u/dy2` in 2D) at every point.
    pub fn curvatures(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![self.op.apply_field(MultiIndex::DXX, u)];
        if self.op.dim() == 2 {
            out.push(self.op.apply_field(MultiIndex::DYY, u));
        }
        out
    }
}

/// Runs the detection cascade on a candidate state.
pub fn detect(
    u_prev: &[f64],
    u_cand: &[f64],
    curvature: &CurvatureSource,
    cloud: &PointCloud,
    cfg: &MoodConfig,
) -> MoodReport {
    let mut curv: Option<Vec<Vec<f64>>> = None;
    let verdicts = (0..u_prev.len())
        .map(|i| {
            if dmp_check(u_prev, u_cand[i], cloud, i) {
                return Verdict::DmpOk;
            }
            let delta = cfg.delta[i];
            if cfg.mode == MoodMode::StrictDmp {
                return Verdict::Rejected;
            }
            let relaxed = cfg.mode == MoodMode::RelaxedU2;
            if relaxed && flat_region_check(u_prev, cloud, i, delta) {
                return Verdict::FlatRegion;
            }
            let fields = curv.get_or_insert_with(|| curvature.curvatures(u_prev));
            let bounds: Vec<CurvatureBounds> = fields.iter().map(|c| CurvatureBounds::around(c, cloud, i)).collect();
            if u2_check(&bounds, delta, relaxed) {
                Verdict::U2Extremum
            } else {
                Verdict::Rejected
            }
        })
        .collect();
    MoodReport { verdicts }
}
