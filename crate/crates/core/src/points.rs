//! Point sets and the density abstraction shared by every estimator stage.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::QuadGrid;
use crate::tmle::FluctuatedDensity;

/// A row-major collection of points in one or two dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form {dim}-dimensional points",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_1d(values: Vec<f64>) -> Self {
        Self {
            dim: 1,
            coords: values,
        }
    }

    pub fn from_2d(points: &[[f64; 2]]) -> Self {
        Self {
            dim: 2,
            coords: points.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter().map(|p| p[j]).collect()
    }

    /// Fails on the first non-finite coordinate, reporting its point index.
    pub fn ensure_finite(&self) -> Result<()> {
        match self.coords.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite(k / self.dim)),
            None => Ok(()),
        }
    }

    /// Per-dimension (min, max).
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|j| {
                self.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p[j]), hi.max(p[j]))
                    })
            })
            .collect()
    }

    pub(crate) fn concat(&self, other: &PointSet) -> PointSet {
        debug_assert_eq!(self.dim, other.dim);
        let mut coords = Vec::with_capacity(self.coords.len() + other.coords.len());
        coords.extend_from_slice(&self.coords);
        coords.extend_from_slice(&other.coords);
        PointSet {
            dim: self.dim,
            coords,
        }
    }

    pub(crate) fn map_column(&mut self, j: usize, f: impl Fn(f64) -> f64) {
        let d = self.dim;
        for p in self.coords.chunks_exact_mut(d) {
            p[j] = f(p[j]);
        }
    }
}

/// A probability density over R^d that can be evaluated at arbitrary points.
pub trait Density: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, points: &PointSet) -> Result<Vec<f64>>;

    /// Values at every grid point, in grid order.
    fn eval_grid(&self, grid: &QuadGrid) -> Result<Vec<f64>> {
        self.eval(grid.points())
    }

    fn as_fluctuated(&self) -> Option<&FluctuatedDensity> {
        None
    }
}

/// The two arms of a labeled observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Zero,
    One,
}

impl Arm {
    pub fn flip(self) -> Arm {
        match self {
            Arm::Zero => Arm::One,
            Arm::One => Arm::Zero,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Arm::Zero => 0,
            Arm::One => 1,
        }
    }
}

impl TryFrom<u8> for Arm {
    type Error = Error;

    fn try_from(v: u8) -> Result<Arm> {
        match v {
            0 => Ok(Arm::Zero),
            1 => Ok(Arm::One),
            other => Err(Error::InvalidArgument(format!(
                "label {other} is not 0 or 1"
            ))),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}
