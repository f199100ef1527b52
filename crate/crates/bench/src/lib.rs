//! Fixtures shared by the benchmarks.

use meshless::pointcloud::{generate_grid, GridGenConfig};
use meshless::{Domain, Parameters, PointCloud};

/// Random cloud with `n` points per axis on the standard periodic domain.
pub fn cloud(dim: usize, n: usize, seed: u64) -> PointCloud {
    let params = Parameters::defaults(dim);
    generate_grid(&Domain::standard(dim), &GridGenConfig::new(n, 0.5, seed), params.h_max_factor).expect("grid generation")
}

/// Smooth field sampled on `cloud`.
pub fn gaussian(cloud: &PointCloud) -> Vec<f64> {
    cloud.positions().iter().map(|p| (-p[0] * p[0] - p[1] * p[1]).exp()).collect()
}
