//! Meshless generalized finite difference schemes for the linear advection
//! equation `u_t + a . grad u = 0` on irregular point clouds.
//!
//! The crate provides
//!
//! - perturbed-lattice point clouds with fixed-radius neighbourhoods
//!   ([`pointcloud`]),
//! - moving-least-squares derivative operators of any degree ([`mls`]),
//! - upwind, positive, central, MUSCL and WENO semi-discretisations
//!   ([`schemes`]),
//! - a posteriori MOOD admissibility detection ([`mood`]),
//! - explicit Runge-Kutta integration with MOOD fallback ([`timeint`]),
//! - dense spectra of the semi-discrete operators ([`stability`], [`eigen`]),
//! - drivers for the convergence, stability, boundary, conservation and
//!   efficiency studies ([`experiments`]).

// Index loops mirror the linear algebra; negated comparisons send NaN down
// the rejecting branch on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod experiments;
pub mod mls;
pub mod mood;
pub mod params;
pub mod pointcloud;
pub mod schemes;
pub mod seeds;
pub mod stability;
pub mod timeint;

pub use error::{Error, Result};
pub use mls::{DerivativeOperator, MultiIndex, WeightConfig};
pub use mood::{MoodConfig, MoodMode, MoodReport, Verdict};
pub use params::Parameters;
pub use pointcloud::{Domain, GridGenConfig, Point, PointCloud};
pub use schemes::{SchemeContext, SchemeId, SpatialScheme};
pub use timeint::{ButcherTableau, IntegrationConfig};
