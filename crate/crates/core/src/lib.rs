//! Targeted maximum likelihood estimation of the L2 distance
//! `integral (p1(x) - p0(x))^2 dx` between two densities observed through
//! labeled samples.
//!
//! The pipeline fits a Gaussian kernel density estimate per arm
//! ([`kde`]), fluctuates both fits along the canonical gradient of the
//! distance ([`gradient`], [`tmle`]) and plugs the targeted fits back into
//! the distance ([`estimator`]). [`sim`] runs Monte Carlo coverage studies on
//! three analytic designs and [`geo`] applies the estimator per category to
//! before/after windows of geo-located incident records.

pub mod analytic;
pub mod error;
pub mod estimator;
pub mod geo;
pub mod gradient;
pub mod grid;
pub mod kde;
pub mod points;
pub mod sim;
pub mod stats;
pub mod svg;
pub mod tmle;

pub use error::{Error, Result};
pub use estimator::{
    estimate_l2d, influence_se, l2d_plugin, wald_ci, BandwidthRule, EstimateOptions,
    EstimateReport, Interval, LabeledDataset, SeSource,
};
pub use geo::{analyze, ingest_csv, ColumnMap, GeoOptions, IncidentRecord, WindowSpec};
pub use gradient::{
    centering_constants, efficiency_bound, gradient_at, gradient_mean_zero_check, remainder_r2,
    DensityPair, GradientField,
};
pub use grid::{build_grid, integrate, QuadGrid};
pub use kde::{kde_eval, kde_fit, Bandwidth, KernelDensity};
pub use points::{Arm, Density, PointSet};
pub use tmle::{tmle_targeting_loop, tmle_update, TmleFit};
