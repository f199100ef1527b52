//! Irregular point clouds on periodic or bounded boxes.
//!
//! Grids are produced by perturbing a uniform lattice: along every axis the
//! node `k` sits at `lo + k*dx + r*(2p - 1)` with `p ~ U(0, 1)`. Randomness
//! is expressed as a fraction of `dx`, capped at one half so that the index
//! order of the nodes along an axis is never inverted.
//!
//! The pseudo-random source is `ChaCha8Rng` seeded with `seed_from_u64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A coordinate. In 1D the second component is always zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    periodic: [bool; 2],
}

impl Domain {
    pub fn new(dim: usize, lo: [f64; 2], hi: [f64; 2], periodic: [bool; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidConfig(format!("dimension must be 1 or 2, got {dim}")));
        }
        for axis in 0..dim {
            if !(hi[axis] > lo[axis]) {
                return Err(Error::InvalidConfig(format!(
                    "axis {axis}: hi ({}) must exceed lo ({})",
                    hi[axis], lo[axis]
                )));
            }
        }
        Ok(Self { dim, lo, hi, periodic })
    }

    pub fn periodic_1d(lo: f64, hi: f64) -> Self {
        Self::new(1, [lo, 0.0], [hi, 0.0], [true, false]).expect("valid interval")
    }

    pub fn bounded_1d(lo: f64, hi: f64) -> Self {
        Self::new(1, [lo, 0.0], [hi, 0.0], [false, false]).expect("valid interval")
    }

    pub fn periodic_2d(lo: f64, hi: f64) -> Self {
        Self::new(2, [lo, lo], [hi, hi], [true, true]).expect("valid square")
    }

    /// The `[-5, 5]^dim` periodic box used throughout the experiments.
    pub fn standard(dim: usize) -> Self {
        match dim {
            1 => Self::periodic_1d(-5.0, 5.0),
            _ => Self::periodic_2d(-5.0, 5.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn fully_periodic(&self) -> bool {
        (0..self.dim).all(|a| self.periodic[a])
    }

    /// Volume (length in 1D, area in 2D).
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.length(a)).product()
    }

    /// Maps a coordinate back into `[lo, hi)` on periodic axes; coordinates
    /// already inside are returned unchanged.
    pub fn wrap(&self, mut x: Point) -> Point {
        for axis in 0..self.dim {
            if self.periodic[axis] && !(self.lo[axis] <= x[axis] && x[axis] < self.hi[axis]) {
                let len = self.length(axis);
                let shifted = (x[axis] - self.lo[axis]).rem_euclid(len);
                // rem_euclid may round up to `len` for tiny negative inputs.
                x[axis] = self.lo[axis] + if shifted >= len { 0.0 } else { shifted };
            }
        }
        x
    }

    /// Minimal-image displacement `x_j - x_i`.
    pub fn periodic_delta(&self, xi: &Point, xj: &Point) -> Point {
        let mut d = [0.0; 2];
        for axis in 0..self.dim {
            let mut v = xj[axis] - xi[axis];
            if self.periodic[axis] {
                let len = self.length(axis);
                v -= len * (v / len).round();
            }
            d[axis] = v;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGenConfig {
    pub n_per_axis: usize,
    /// Perturbation amplitude as a fraction of the base spacing, in `[0, 0.5]`.
    pub randomness: f64,
    pub seed: u64,
}

impl GridGenConfig {
    pub fn new(n_per_axis: usize, randomness: f64, seed: u64) -> Self {
        Self { n_per_axis, randomness, seed }
    }
}

/// Lattice spacing along an axis. Periodic axes hold `n` cells; bounded axes
/// place nodes on both end points.
pub fn base_spacing(domain: &Domain, axis: usize, n_per_axis: usize) -> f64 {
    if domain.is_periodic(axis) {
        domain.length(axis) / n_per_axis as f64
    } else {
        domain.length(axis) / (n_per_axis - 1) as f64
    }
}

/// Perturbed lattice positions and the base spacing.
///
/// Points are numbered with the x index running fastest. Nodes on the end
/// points of a bounded axis are not perturbed.
pub fn generate_positions(domain: &Domain, cfg: &GridGenConfig) -> Result<(Vec<Point>, f64)> {
    if cfg.n_per_axis < 4 {
        return Err(Error::InvalidConfig(format!(
            "need at least 4 points per axis, got {}",
            cfg.n_per_axis
        )));
    }
    if !(0.0..=0.5).contains(&cfg.randomness) {
        return Err(Error::InvalidConfig(format!(
            "randomness must lie in [0, 0.5] (fraction of dx), got {}",
            cfg.randomness
        )));
    }
    let dim = domain.dim();
    let n = cfg.n_per_axis;
    let spacing: Vec<f64> = (0..dim).map(|a| base_spacing(domain, a, n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = n.pow(dim as u32);
    let mut positions = Vec::with_capacity(total);
    for flat in 0..total {
        let idx = [flat % n, flat / n];
        let mut x = [0.0; 2];
        for axis in 0..dim {
            let k = idx[axis];
            let dx = spacing[axis];
            let node = domain.lo(axis) + dx * k as f64;
            let at_end = !domain.is_periodic(axis) && (k == 0 || k == n - 1);
            // Draw unconditionally so the stream does not depend on boundaries.
            let p: f64 = rng.random();
            x[axis] = if at_end { node } else { node + cfg.randomness * dx * (2.0 * p - 1.0) };
        }
        positions.push(domain.wrap(x));
    }
    // The lattice is square in 2D, so a single spacing describes it.
    Ok((positions, spacing[0]))
}

/// One entry of a neighbourhood: the neighbour index and `x_j - x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub delta: Point,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.delta[0].hypot(self.delta[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    domain: Domain,
    positions: Vec<Point>,
    dx: f64,
    h_max: f64,
    neighbors: Vec<Vec<Neighbor>>,
    cell_size: Vec<f64>,
    quadrature: Vec<f64>,
}

impl PointCloud {
    /// Builds neighbourhoods and cell sizes for a set of positions.
    pub fn new(domain: Domain, positions: Vec<Point>, dx: f64, h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(Error::InvalidConfig(format!("h_max must be positive, got {h_max}")));
        }
        if positions.len() < 2 {
            return Err(Error::InvalidConfig("a point cloud needs at least two points".into()));
        }
        for axis in 0..domain.dim() {
            if domain.is_periodic(axis) && 2.0 * h_max >= domain.length(axis) {
                return Err(Error::InvalidConfig(format!(
                    "h_max ({h_max}) must be below half the periodic length on axis {axis}"
                )));
            }
        }
        let neighbors = build_neighborhoods(&domain, &positions, h_max);
        for (i, nb) in neighbors.iter().enumerate() {
            if let Some(n) = nb.iter().find(|n| n.distance() == 0.0) {
                return Err(Error::DuplicatePoint(i, n.index));
            }
        }
        let (cell_size, quadrature) = cell_sizes(&domain, &positions, dx);
        Ok(Self { domain, positions, dx, h_max, neighbors, cell_size, quadrature })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Point {
        self.positions[i]
    }

    /// Base spacing of the lattice before perturbation.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn cell_size(&self, i: usize) -> f64 {
        self.cell_size[i]
    }

    pub fn cell_sizes(&self) -> &[f64] {
        &self.cell_size
    }

    /// First-order quadrature weights (sum to the domain measure).
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quadrature
    }

    pub fn delta(&self, i: usize, j: usize) -> Point {
        self.domain.periodic_delta(&self.positions[i], &self.positions[j])
    }

    /// Neighbours with `a . (x_j - x_i) < 0`.
    pub fn upwind_stencil(&self, i: usize, velocity: Point) -> Vec<Neighbor> {
        self.neighbors[i]
            .iter()
            .filter(|n| velocity[0] * n.delta[0] + velocity[1] * n.delta[1] < 0.0)
            .copied()
            .collect()
    }

    pub fn directional_stencils(&self, i: usize) -> DirectionalStencils {
        let mut s = DirectionalStencils::default();
        for n in &self.neighbors[i] {
            if n.delta[0] < 0.0 {
                s.left.push(*n);
            } else {
                s.right.push(*n);
            }
            if self.dim() == 2 {
                if n.delta[1] < 0.0 {
                    s.bottom.push(*n);
                } else {
                    s.top.push(*n);
                }
            }
        }
        s
    }

    /// Relabels the points: new point `k` is old point `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let positions = order.iter().map(|&k| self.positions[k]).collect();
        Self::new(self.domain.clone(), positions, self.dx, self.h_max)
    }
}

/// Split of a neighbourhood by the sign of each displacement component.
/// Zero components go to the positive side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectionalStencils {
    pub left: Vec<Neighbor>,
    pub right: Vec<Neighbor>,
    pub bottom: Vec<Neighbor>,
    pub top: Vec<Neighbor>,
}

/// Generates a perturbed lattice and builds its neighbourhoods.
pub fn generate_grid(domain: &Domain, cfg: &GridGenConfig, h_max_factor: f64) -> Result<PointCloud> {
    let (positions, dx) = generate_positions(domain, cfg)?;
    PointCloud::new(domain.clone(), positions, dx, h_max_factor * dx)
}

/// `C_i = { j != i : |x_j - x_i| <= h_max }`, sorted by index.
///
/// Uses a uniform bucket grid with cells at least `h_max` wide; falls back to
/// a full scan when an axis holds fewer than three buckets.
pub fn build_neighborhoods(domain: &Domain, positions: &[Point], h_max: f64) -> Vec<Vec<Neighbor>> {
    let dim = domain.dim();
    let mut cells = [1usize; 2];
    for axis in 0..dim {
        cells[axis] = ((domain.length(axis) / h_max).floor() as usize).max(1);
    }
    if (0..dim).any(|a| cells[a] < 3) {
        return brute_force_neighborhoods(domain, positions, h_max);
    }
    let cell_of = |x: &Point| -> [usize; 2] {
        let mut c = [0usize; 2];
        for axis in 0..dim {
            let t = (x[axis] - domain.lo(axis)) / domain.length(axis) * cells[axis] as f64;
            c[axis] = (t.floor().max(0.0) as usize).min(cells[axis] - 1);
        }
        c
    };
    let mut buckets = vec![Vec::new(); cells[0] * cells[1]];
    for (k, x) in positions.iter().enumerate() {
        let c = cell_of(x);
        buckets[c[0] + cells[0] * c[1]].push(k);
    }
    let h2 = h_max * h_max;
    let offsets: &[isize] = &[-1, 0, 1];
    positions
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let c = cell_of(xi);
            let mut out = Vec::new();
            let ys: &[isize] = if dim == 2 { offsets } else { &[0] };
            for &oy in ys {
                for &ox in offsets {
                    let Some(bx) = shift(c[0], ox, cells[0], domain.is_periodic(0)) else { continue };
                    let Some(by) = shift(c[1], oy, cells[1], dim == 2 && domain.is_periodic(1)) else {
                        continue;
                    };
                    for &j in &buckets[bx + cells[0] * by] {
                        if j == i {
                            continue;
                        }
                        let d = domain.periodic_delta(xi, &positions[j]);
                        if d[0] * d[0] + d[1] * d[1] <= h2 {
                            out.push(Neighbor { index: j, delta: d });
                        }
                    }
                }
            }
            out.sort_by_key(|n| n.index);
            out
        })
        .collect()
}

fn shift(c: usize, o: isize, n: usize, periodic: bool) -> Option<usize> {
    let t = c as isize + o;
    if periodic {
        Some(t.rem_euclid(n as isize) as usize)
    } else if t < 0 || t >= n as isize {
        None
    } else {
        Some(t as usize)
    }
}

/// Reference O(N^2) neighbour search.
pub fn brute_force_neighborhoods(domain: &Domain, positions: &[Point], h_max: f64) -> Vec<Vec<Neighbor>> {
    let h2 = h_max * h_max;
    positions
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .filter_map(|(j, xj)| {
                    let d = domain.periodic_delta(xi, xj);
                    (d[0] * d[0] + d[1] * d[1] <= h2).then_some(Neighbor { index: j, delta: d })
                })
                .collect()
        })
        .collect()
}

/// Per-point cell size and quadrature weight.
///
/// In 1D the cell of a point spans half way to each neighbour in coordinate
/// order. In 2D every point gets the base spacing and weight `dx^2`.
pub fn cell_sizes(domain: &Domain, positions: &[Point], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = positions.len();
    if domain.dim() == 2 {
        return (vec![dx; n], vec![dx * dx; n]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| positions[a][0].total_cmp(&positions[b][0]));
    let periodic = domain.is_periodic(0);
    let len = domain.length(0);
    let x = |k: usize| positions[order[k]][0];
    let mut size = vec![0.0; n];
    for k in 0..n {
        let (left, right) = if periodic {
            let left = if k == 0 { x(n - 1) - len } else { x(k - 1) };
            let right = if k == n - 1 { x(0) + len } else { x(k + 1) };
            (left, right)
        } else {
            let left = if k == 0 { x(0) } else { x(k - 1) };
            let right = if k == n - 1 { x(n - 1) } else { x(k + 1) };
            (left, right)
        };
        size[order[k]] = 0.5 * (right - left);
    }
    (size.clone(), size)
}

/// Writes the grid as CSV: a `dim,N,hmax,dx` header line, its values, then
/// one `index,x[,y]` row per point with 17 significant digits.
pub fn write_grid_csv<W: std::io::Write>(cloud: &PointCloud, mut w: W) -> std::io::Result<()> {
    writeln!(w, "dim,N,hmax,dx")?;
    writeln!(w, "{},{},{:.16e},{:.16e}", cloud.dim(), cloud.len(), cloud.h_max(), cloud.dx())?;
    for (i, x) in cloud.positions().iter().enumerate() {
        if cloud.dim() == 1 {
            writeln!(w, "{},{:.16e}", i + 1, x[0])?;
        } else {
            writeln!(w, "{},{:.16e},{:.16e}", i + 1, x[0], x[1])?;
        }
    }
    Ok(())
}

/// Reads a grid written by [`write_grid_csv`] back onto `domain`.
pub fn read_grid_csv<R: std::io::BufRead>(domain: Domain, r: R) -> Result<PointCloud> {
    let bad = |msg: &str| Error::Format(msg.to_string());
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty grid file"))??;
    if header.trim() != "dim,N,hmax,dx" {
        return Err(bad("unexpected grid header"));
    }
    let meta = lines.next().ok_or_else(|| bad("missing grid metadata"))??;
    let fields: Vec<&str> = meta.trim().split(',').collect();
    if fields.len() != 4 {
        return Err(bad("grid metadata needs 4 fields"));
    }
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number in grid file"));
    let dim = parse(fields[0])? as usize;
    let n = parse(fields[1])? as usize;
    let h_max = parse(fields[2])?;
    let dx = parse(fields[3])?;
    if dim != domain.dim() {
        return Err(bad("grid dimension does not match the domain"));
    }
    let mut positions = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != dim + 1 {
            return Err(bad("wrong number of columns in grid row"));
        }
        let mut x = [0.0; 2];
        for axis in 0..dim {
            x[axis] = parse(f[axis + 1])?;
        }
        positions.push(x);
    }
    if positions.len() != n {
        return Err(bad("point count does not match header"));
    }
    PointCloud::new(domain, positions, dx, h_max)
}
