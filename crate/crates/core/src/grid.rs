//! Tensor-product trapezoid grids.
//!
//! Every integral in the estimator is a weighted sum over one of these grids.
//! Points are stored row-major with the last axis varying fastest, so a 2-D
//! grid with axes `x` (length `nx`) and `y` (length `ny`) stores point
//! `(x[i], y[j])` at index `i * ny + j`.

use crate::error::{Error, Result};
use crate::points::PointSet;

pub const DEFAULT_POINTS_1D: usize = 401;
pub const DEFAULT_POINTS_2D: usize = 201;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadGrid {
    bounds: Vec<(f64, f64)>,
    axes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    points: PointSet,
}

/// Trapezoid grid with `points_per_dim` equally spaced nodes on each axis.
pub fn build_grid(bounds: &[(f64, f64)], points_per_dim: usize) -> Result<QuadGrid> {
    if !(1..=2).contains(&bounds.len()) {
        return Err(Error::UnsupportedDimension(bounds.len()));
    }
    if points_per_dim < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 points per dimension, got {points_per_dim}"
        )));
    }
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite bounds on axis {j}")));
        }
        if lo >= hi {
            return Err(Error::InvalidGrid(format!(
                "axis {j}: lower bound {lo} is not below upper bound {hi}"
            )));
        }
    }

    let m = points_per_dim;
    let (axes, axis_weights): (Vec<Vec<f64>>, Vec<Vec<f64>>) = bounds
        .iter()
        .map(|&(lo, hi)| {
            let step = (hi - lo) / (m - 1) as f64;
            let mut axis: Vec<f64> = (0..m).map(|i| lo + i as f64 * step).collect();
            axis[m - 1] = hi;
            let mut w = vec![step; m];
            w[0] = 0.5 * step;
            w[m - 1] = 0.5 * step;
            (axis, w)
        })
        .unzip();

    let (weights, coords) = match axes.len() {
        1 => (axis_weights[0].clone(), axes[0].clone()),
        _ => {
            let mut weights = Vec::with_capacity(m * m);
            let mut coords = Vec::with_capacity(2 * m * m);
            for i in 0..m {
                for j in 0..m {
                    weights.push(axis_weights[0][i] * axis_weights[1][j]);
                    coords.push(axes[0][i]);
                    coords.push(axes[1][j]);
                }
            }
            (weights, coords)
        }
    };

    Ok(QuadGrid {
        bounds: bounds.to_vec(),
        points: PointSet::new(axes.len(), coords)?,
        axes,
        weights,
    })
}

impl QuadGrid {
    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, j: usize) -> &[f64] {
        &self.axes[j]
    }

    pub fn points_per_dim(&self) -> usize {
        self.axes[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Quadrature sum `sum_i w_i v_i`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(self.weighted_sum(values))
    }

    /// Integral of a pointwise function of the grid values, without an
    /// intermediate buffer.
    pub(crate) fn integrate_with(&self, f: impl Fn(usize) -> f64) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for (i, w) in self.weights.iter().enumerate() {
            let v = f(i);
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            acc.add(w * v);
        }
        Ok(acc.total())
    }

    fn weighted_sum(&self, values: &[f64]) -> f64 {
        let mut acc = CompensatedSum::default();
        for (w, v) in self.weights.iter().zip(values) {
            acc.add(w * v);
        }
        acc.total()
    }
}

/// Neumaier summation; keeps weight-sum identities exact to a few ulps.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Free-function form of [`QuadGrid::integrate`].
pub fn integrate(grid: &QuadGrid, values: &[f64]) -> Result<f64> {
    grid.integrate(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_point_trapezoid() {
        let g = build_grid(&[(0.0, 1.0)], 3).unwrap();
        assert_eq!(g.axis(0), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn box_volume_2d() {
        let g = build_grid(&[(0.0, 2.0), (0.0, 1.0)], 3).unwrap();
        assert_eq!(g.len(), 9);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        // last axis fastest
        assert_eq!(g.points().point(1), &[0.0, 0.5]);
        assert_eq!(g.points().point(3), &[1.0, 0.0]);
    }

    #[test]
    fn spacing_401() {
        let g = build_grid(&[(-1.0, 1.0)], 401).unwrap();
        assert_eq!(g.len(), 401);
        let a = g.axis(0);
        for w in a.windows(2) {
            assert!((w[1] - w[0] - 0.005).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_grid(&[(0.0, 1.0)], 2).is_err());
        assert!(build_grid(&[(1.0, 1.0)], 10).is_err());
        assert!(build_grid(&[(2.0, 1.0)], 10).is_err());
        assert!(build_grid(&[(0.0, f64::INFINITY)], 10).is_err());
        assert!(build_grid(&[(0.0, f64::NAN)], 10).is_err());
        assert!(build_grid(&[], 10).is_err());
        assert!(build_grid(&[(0.0, 1.0); 3], 10).is_err());
    }

    #[test]
    fn integrate_constant_and_square() {
        let g = build_grid(&[(0.0, 1.0)], 401).unwrap();
        assert_eq!(g.integrate(&vec![1.0; 401]).unwrap(), 1.0);
        let sq: Vec<f64> = g.axis(0).iter().map(|x| x * x).collect();
        assert!((g.integrate(&sq).unwrap() - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn integrate_errors() {
        let g = build_grid(&[(0.0, 1.0)], 5).unwrap();
        assert!(matches!(
            g.integrate(&[1.0; 4]),
            Err(Error::LengthMismatch {
                expected: 5,
                got: 4
            })
        ));
        assert!(matches!(
            g.integrate(&[1.0, 1.0, f64::NAN, 1.0, 1.0]),
            Err(Error::NonFinite(2))
        ));
    }

    #[test]
    fn refinement_reduces_error() {
        let err = |m: usize| {
            let g = build_grid(&[(0.0, 1.0)], m).unwrap();
            let sq: Vec<f64> = g.axis(0).iter().map(|x| x * x).collect();
            (g.integrate(&sq).unwrap() - 1.0 / 3.0).abs()
        };
        assert!(err(201) < err(101));
        assert!(err(401) < err(201));
    }

    proptest! {
        #[test]
        fn weights_positive_and_sum_to_volume(
            lo0 in -50.0f64..50.0, w0 in 0.01f64..20.0,
            lo1 in -50.0f64..50.0, w1 in 0.01f64..20.0,
            m in 3usize..60, two_d in any::<bool>(),
        ) {
            let bounds = if two_d {
                vec![(lo0, lo0 + w0), (lo1, lo1 + w1)]
            } else {
                vec![(lo0, lo0 + w0)]
            };
            let g = build_grid(&bounds, m).unwrap();
            prop_assert!(g.weights().iter().all(|&w| w > 0.0));
            let total: f64 = g.weights().iter().sum();
            prop_assert!((total - g.volume()).abs() <= 1e-12 * g.volume());
            for axis in g.axes() {
                prop_assert!(axis.windows(2).all(|w| w[1] > w[0]));
            }
        }

        #[test]
        fn linearity(a in -10.0f64..10.0, b in -10.0f64..10.0, seed in any::<u64>()) {
            let g = build_grid(&[(0.0, 1.0), (-1.0, 1.0)], 17).unwrap();
            let u: Vec<f64> = (0..g.len()).map(|i| ((i as u64 ^ seed) % 97) as f64 / 97.0).collect();
            let v: Vec<f64> = (0..g.len()).map(|i| ((i as u64).wrapping_mul(31) % 13) as f64 - 6.0).collect();
            let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = g.integrate(&mix).unwrap();
            let rhs = a * g.integrate(&u).unwrap() + b * g.integrate(&v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
