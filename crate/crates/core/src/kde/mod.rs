//! Gaussian kernel density estimation with a diagonal global bandwidth.

mod bandwidth;
mod fastsum;

use std::f64::consts::PI;

pub use bandwidth::{normal_reference_bandwidth, plug_in_bandwidth, Bandwidth, Selector};

use crate::error::{Error, Result};
use crate::grid::QuadGrid;
use crate::points::{Density, PointSet};
use fastsum::{FastGaussSum, CUTOFF};

/// Product Gaussian kernel estimate `(1/n) sum_i prod_j phi((x_j - X_ij) / h_j) / h_j`.
#[derive(Clone, Debug)]
pub struct KernelDensity {
    sample: PointSet,
    bandwidth: Bandwidth,
    // 1-D: boxed Taylor moments. 2-D: sample sorted by first coordinate.
    engine: Engine,
}

#[derive(Clone, Debug)]
enum Engine {
    Line(FastGaussSum),
    Plane { sorted: Vec<[f64; 2]> },
}

pub fn kde_fit(sample: &PointSet, bw: &Bandwidth) -> Result<KernelDensity> {
    if sample.is_empty() {
        return Err(Error::TooFewObservations { need: 1, got: 0 });
    }
    if bw.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: bw.dim(),
        });
    }
    sample.ensure_finite()?;
    let engine = match sample.dim() {
        1 => Engine::Line(FastGaussSum::new(sample.coords(), bw.scales()[0])),
        _ => {
            let mut sorted: Vec<[f64; 2]> = sample.iter().map(|p| [p[0], p[1]]).collect();
            sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            Engine::Plane { sorted }
        }
    };
    Ok(KernelDensity {
        sample: sample.clone(),
        bandwidth: bw.clone(),
        engine,
    })
}

/// Evaluates a fitted density at `points`.
pub fn kde_eval(density: &KernelDensity, points: &PointSet) -> Result<Vec<f64>> {
    density.eval(points)
}

impl KernelDensity {
    pub fn bandwidth(&self) -> &Bandwidth {
        &self.bandwidth
    }

    pub fn sample(&self) -> &PointSet {
        &self.sample
    }

    fn norm(&self) -> f64 {
        let n = self.sample.len() as f64;
        let h: f64 = self.bandwidth.scales().iter().product();
        n * h * (2.0 * PI).powf(0.5 * self.sample.dim() as f64)
    }

    fn check_query(&self, points: &PointSet) -> Result<()> {
        if points.dim() != self.sample.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sample.dim(),
                got: points.dim(),
            });
        }
        points.ensure_finite()
    }

    /// Untruncated kernel sum over every sample point; O(n m). Used as the
    /// reference for the accelerated paths.
    pub fn eval_direct(&self, points: &PointSet) -> Result<Vec<f64>> {
        self.check_query(points)?;
        let h = self.bandwidth.scales();
        let norm = self.norm();
        Ok(points
            .iter()
            .map(|x| {
                self.sample
                    .iter()
                    .map(|xi| {
                        let q: f64 = x
                            .iter()
                            .zip(xi)
                            .zip(h)
                            .map(|((a, b), h)| ((a - b) / h).powi(2))
                            .sum();
                        (-0.5 * q).exp()
                    })
                    .sum::<f64>()
                    / norm
            })
            .collect())
    }

    fn plane_sum(&self, sorted: &[[f64; 2]], x: f64, y: f64) -> f64 {
        let h = self.bandwidth.scales();
        let (hx, hy) = (h[0], h[1]);
        let lo = sorted.partition_point(|p| p[0] < x - CUTOFF * hx);
        let mut total = 0.0;
        for p in &sorted[lo..] {
            let zx = (x - p[0]) / hx;
            if zx < -CUTOFF {
                break;
            }
            let zy = (y - p[1]) / hy;
            if zy.abs() <= CUTOFF {
                total += (-0.5 * (zx * zx + zy * zy)).exp();
            }
        }
        total
    }
}

impl Density for KernelDensity {
    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn eval(&self, points: &PointSet) -> Result<Vec<f64>> {
        self.check_query(points)?;
        let norm = self.norm();
        Ok(match &self.engine {
            Engine::Line(fast) => points
                .coords()
                .iter()
                .map(|&x| fast.sum_at(x) / norm)
                .collect(),
            Engine::Plane { sorted } => points
                .iter()
                .map(|p| self.plane_sum(sorted, p[0], p[1]) / norm)
                .collect(),
        })
    }

    fn eval_grid(&self, grid: &QuadGrid) -> Result<Vec<f64>> {
        if grid.dims() != 2 || self.sample.dim() != 2 {
            return self.eval(grid.points());
        }
        // Separable product kernel: one n-length factor per axis node, then
        // an outer-product accumulation.
        let h = self.bandwidth.scales();
        let factors = |axis: &[f64], j: usize| -> Vec<Vec<f64>> {
            axis.iter()
                .map(|&g| {
                    self.sample
                        .iter()
                        .map(|p| {
                            let z = (g - p[j]) / h[j];
                            if z.abs() > CUTOFF {
                                0.0
                            } else {
                                (-0.5 * z * z).exp()
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let kx = factors(grid.axis(0), 0);
        let ky = factors(grid.axis(1), 1);
        let norm = self.norm();
        let mut out = Vec::with_capacity(grid.len());
        for row in &kx {
            for col in &ky {
                let s: f64 = row.iter().zip(col).map(|(a, b)| a * b).sum();
                out.push(s / norm);
            }
        }
        Ok(out)
    }
}
