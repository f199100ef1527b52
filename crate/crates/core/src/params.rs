use crate::error::{Error, Result};
use crate::mls::WeightConfig;
use crate::pointcloud::Point;

/// Global problem parameters shared by all schemes on one cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Advection velocity `a`.
    pub velocity: Point,
    /// Neighbour radius in units of the base spacing.
    pub h_max_factor: f64,
    /// WENO regulariser.
    pub weno_eps: f64,
    /// Overrides the dimension-dependent weight decay when set.
    pub alpha: Option<f64>,
}

impl Parameters {
    /// Defaults used in all experiments:
    ///
    /// | dim | a      | h_max        | eps   | alpha         |
    /// |-----|--------|--------------|-------|---------------|
    /// | 1   | 1      | 3.5 dx       | 1e-6  | dx^-2         |
    /// | 2   | (1, 1) | sqrt(34) dx  | 1e-12 | 6 / h_max^2   |
    pub fn defaults(dim: usize) -> Self {
        if dim == 1 {
            Self { velocity: [1.0, 0.0], h_max_factor: 3.5, weno_eps: 1e-6, alpha: None }
        } else {
            Self { velocity: [1.0, 1.0], h_max_factor: 34f64.sqrt(), weno_eps: 1e-12, alpha: None }
        }
    }

    pub fn with_velocity(mut self, velocity: Point) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn weights(&self, dim: usize, dx: f64, h_max: f64) -> Result<WeightConfig> {
        let alpha = match self.alpha {
            Some(a) => a,
            None if dim == 1 => 1.0 / (dx * dx),
            None => 6.0 / (h_max * h_max),
        };
        WeightConfig::new(alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_max_factor > 0.0) {
            return Err(Error::InvalidConfig("h_max factor must be positive".into()));
        }
        if !(self.weno_eps > 0.0) {
            return Err(Error::InvalidConfig("WENO epsilon must be positive".into()));
        }
        if !self.velocity.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("velocity must be finite".into()));
        }
        Ok(())
    }
}
