//! Closed-form univariate densities used as simulation truths.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::points::{Density, PointSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticDensity {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// Symmetric tent with peak `1 / half_width` at `center`.
    Triangle {
        center: f64,
        half_width: f64,
    },
    /// Uniform on the closed interval `[lo, hi]`.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl AnalyticDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            AnalyticDensity::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            AnalyticDensity::Triangle { center, half_width } => {
                let r = 1.0 - (x - center).abs() / half_width;
                r.max(0.0) / half_width
            }
            AnalyticDensity::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            AnalyticDensity::Gaussian { mean, sd } => {
                0.5 * statrs::function::erf::erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
            }
            AnalyticDensity::Triangle { center, half_width } => {
                let z = ((x - center) / half_width).clamp(-1.0, 1.0);
                if z <= 0.0 {
                    0.5 * (1.0 + z).powi(2)
                } else {
                    1.0 - 0.5 * (1.0 - z).powi(2)
                }
            }
            AnalyticDensity::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AnalyticDensity::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            AnalyticDensity::Triangle { center, half_width } => {
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                center + half_width * (u1 + u2 - 1.0)
            }
            AnalyticDensity::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    /// An interval outside of which the density is zero or below 1e-30.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            AnalyticDensity::Gaussian { mean, sd } => (mean - 12.0 * sd, mean + 12.0 * sd),
            AnalyticDensity::Triangle { center, half_width } => {
                (center - half_width, center + half_width)
            }
            AnalyticDensity::Uniform { lo, hi } => (lo, hi),
        }
    }
}

impl Density for AnalyticDensity {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, points: &PointSet) -> Result<Vec<f64>> {
        if points.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: points.dim(),
            });
        }
        points.ensure_finite()?;
        Ok(points.coords().iter().map(|&x| self.pdf(x)).collect())
    }
}
