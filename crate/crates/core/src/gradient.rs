//! Canonical gradient of the L2 distance and its companion diagnostics.
//!
//! For a pair of conditional densities `p0`, `p1` and `P(A = 1) = pa1`:
//!
//! ```text
//! D*(x, 1) = 2 / pa1       * (p1(x) - p0(x) - c1),   c1 = integral (p1 - p0) p1
//! D*(x, 0) = 2 / (1 - pa1) * (p0(x) - p1(x) - c0),   c0 = integral (p0 - p1) p0
//! ```
//!
//! All integrals are taken on the pair's shared [`QuadGrid`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimator::l2d_plugin;
use crate::grid::QuadGrid;
use crate::points::{Arm, Density, PointSet};

/// Two conditional densities with the arm probability and the grid they are
/// integrated on.
#[derive(Clone, Debug)]
pub struct DensityPair {
    p0: Arc<dyn Density>,
    p1: Arc<dyn Density>,
    pa1: f64,
    grid: Arc<QuadGrid>,
}

impl DensityPair {
    pub fn new(
        p0: Arc<dyn Density>,
        p1: Arc<dyn Density>,
        pa1: f64,
        grid: Arc<QuadGrid>,
    ) -> Result<Self> {
        if !(pa1 > 0.0 && pa1 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "P(A = 1) must lie in (0, 1), got {pa1}"
            )));
        }
        for p in [&p0, &p1] {
            if p.dim() != grid.dims() {
                return Err(Error::DimensionMismatch {
                    expected: grid.dims(),
                    got: p.dim(),
                });
            }
        }
        Ok(Self { p0, p1, pa1, grid })
    }

    pub fn p0(&self) -> &Arc<dyn Density> {
        &self.p0
    }

    pub fn p1(&self) -> &Arc<dyn Density> {
        &self.p1
    }

    pub fn density(&self, arm: Arm) -> &Arc<dyn Density> {
        match arm {
            Arm::Zero => &self.p0,
            Arm::One => &self.p1,
        }
    }

    pub fn pa1(&self) -> f64 {
        self.pa1
    }

    pub fn grid(&self) -> &Arc<QuadGrid> {
        &self.grid
    }

    /// The same pair with arms exchanged and `pa1 -> 1 - pa1`.
    pub fn swapped(&self) -> DensityPair {
        DensityPair {
            p0: self.p1.clone(),
            p1: self.p0.clone(),
            pa1: 1.0 - self.pa1,
            grid: self.grid.clone(),
        }
    }

    pub(crate) fn shares_grid(&self, other: &DensityPair) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `(p0, p1)` at `points`. Both arms of a targeted update share their
    /// parent pair, which is then evaluated once rather than twice.
    pub fn eval_both(&self, points: &PointSet) -> Result<(Vec<f64>, Vec<f64>)> {
        if let (Some(f0), Some(f1)) = (self.p0.as_fluctuated(), self.p1.as_fluctuated()) {
            if f0.shares_step(f1) {
                return f0.eval_pair_with(f1, points);
            }
        }
        Ok((self.p0.eval(points)?, self.p1.eval(points)?))
    }

    /// `(p0, p1)` at every grid node.
    pub fn grid_values(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if let (Some(f0), Some(f1)) = (self.p0.as_fluctuated(), self.p1.as_fluctuated()) {
            if f0.shares_step(f1) {
                return f0.eval_pair_with(f1, self.grid.points());
            }
        }
        Ok((
            self.p0.eval_grid(&self.grid)?,
            self.p1.eval_grid(&self.grid)?,
        ))
    }

    /// Grid masses of the two arms.
    pub fn masses(&self) -> Result<(f64, f64)> {
        let (g0, g1) = self.grid_values()?;
        Ok((self.grid.integrate(&g0)?, self.grid.integrate(&g1)?))
    }

    /// Checks nonnegativity on the grid and unit mass within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let (g0, g1) = self.grid_values()?;
        for (arm, g) in [(0, &g0), (1, &g1)] {
            if let Some(i) = g.iter().position(|v| *v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "arm {arm} density is negative at grid node {i}"
                )));
            }
            let mass = self.grid.integrate(g)?;
            if (mass - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "arm {arm} density has grid mass {mass}"
                )));
            }
        }
        Ok(())
    }
}

/// The two mean-centering constants of the gradient plus the arm probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Centering {
    pub c1: f64,
    pub c0: f64,
    pub pa1: f64,
}

impl Centering {
    /// Centering constants from grid values of `p0` and `p1`.
    pub fn from_grid_values(grid: &QuadGrid, p0: &[f64], p1: &[f64], pa1: f64) -> Result<Self> {
        if p0.len() != grid.len() || p1.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: p0.len().min(p1.len()),
            });
        }
        let c1 = grid.integrate_with(|i| (p1[i] - p0[i]) * p1[i])?;
        let c0 = grid.integrate_with(|i| (p0[i] - p1[i]) * p0[i])?;
        Ok(Self { c1, c0, pa1 })
    }

    /// Gradient value for arm `arm` given the densities at the point.
    #[inline]
    pub fn value(&self, p0: f64, p1: f64, arm: Arm) -> f64 {
        match arm {
            Arm::One => 2.0 / self.pa1 * (p1 - p0 - self.c1),
            Arm::Zero => 2.0 / (1.0 - self.pa1) * (p0 - p1 - self.c0),
        }
    }

    pub fn values(&self, p0: &[f64], p1: &[f64], arm: Arm) -> Vec<f64> {
        p0.iter()
            .zip(p1)
            .map(|(a, b)| self.value(*a, *b, arm))
            .collect()
    }
}

/// Canonical gradient of the L2 distance at a [`DensityPair`].
#[derive(Clone, Debug)]
pub struct GradientField {
    centering: Centering,
    pair: DensityPair,
}

pub fn centering_constants(pair: &DensityPair) -> Result<GradientField> {
    let (g0, g1) = pair.grid_values()?;
    let centering = Centering::from_grid_values(pair.grid(), &g0, &g1, pair.pa1())?;
    Ok(GradientField {
        centering,
        pair: pair.clone(),
    })
}

impl GradientField {
    pub fn c1(&self) -> f64 {
        self.centering.c1
    }

    pub fn c0(&self) -> f64 {
        self.centering.c0
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn pair(&self) -> &DensityPair {
        &self.pair
    }

    /// Gradient values at many points for one arm.
    pub fn values_at(&self, points: &PointSet, arm: Arm) -> Result<Vec<f64>> {
        let (q0, q1) = self.pair.eval_both(points)?;
        Ok(self.centering.values(&q0, &q1, arm))
    }

    /// Gradient values on the grid for one arm.
    pub fn grid_values(&self, arm: Arm) -> Result<Vec<f64>> {
        let (g0, g1) = self.pair.grid_values()?;
        Ok(self.centering.values(&g0, &g1, arm))
    }
}

/// `D*(x, a)` at a single point.
pub fn gradient_at(field: &GradientField, x: &[f64], a: Arm) -> Result<f64> {
    let pts = PointSet::new(x.len(), x.to_vec())?;
    Ok(field.values_at(&pts, a)?[0])
}

/// `(integral D*(., 1) p1, integral D*(., 0) p0)`; both vanish for a valid field.
pub fn gradient_mean_zero_check(field: &GradientField) -> Result<(f64, f64)> {
    let grid = field.pair.grid();
    let (g0, g1) = field.pair.grid_values()?;
    let c = field.centering;
    let m1 = grid.integrate_with(|i| c.value(g0[i], g1[i], Arm::One) * g1[i])?;
    let m0 = grid.integrate_with(|i| c.value(g0[i], g1[i], Arm::Zero) * g0[i])?;
    Ok((m1, m0))
}

/// Second-order remainder `-integral ((p1_0 - p0_0) - (p1 - p0))^2`.
pub fn remainder_r2(pair: &DensityPair, truth: &DensityPair) -> Result<f64> {
    if !pair.shares_grid(truth) {
        return Err(Error::GridMismatch);
    }
    let (a0, a1) = pair.grid_values()?;
    let (t0, t1) = truth.grid_values()?;
    let sq = pair
        .grid()
        .integrate_with(|i| ((t1[i] - t0[i]) - (a1[i] - a0[i])).powi(2))?;
    Ok(-sq)
}

/// `Var(D*(P0))` under the truth, the efficiency bound for n * variance.
pub fn efficiency_bound(truth: &DensityPair) -> Result<f64> {
    let grid = truth.grid();
    let (g0, g1) = truth.grid_values()?;
    let c = Centering::from_grid_values(grid, &g0, &g1, truth.pa1())?;
    let v1 = grid.integrate_with(|i| c.value(g0[i], g1[i], Arm::One).powi(2) * g1[i])?;
    let v0 = grid.integrate_with(|i| c.value(g0[i], g1[i], Arm::Zero).powi(2) * g0[i])?;
    Ok(truth.pa1() * v1 + (1.0 - truth.pa1()) * v0)
}

/// Terms of the first-order expansion of `Psi` around a truth.
#[derive(Clone, Copy, Debug)]
pub struct Expansion {
    pub psi: f64,
    pub psi_truth: f64,
    /// `P0 D*(P)`
    pub drift: f64,
    pub remainder: f64,
}

impl Expansion {
    /// `Psi(P) - Psi(P0) + P0 D*(P) - R2(P, P0)`, zero up to quadrature error.
    pub fn gap(&self) -> f64 {
        self.psi - self.psi_truth + self.drift - self.remainder
    }
}

/// Evaluates every term of `Psi(P) - Psi(P0) + P0 D*(P) = R2(P, P0)`.
pub fn first_order_expansion(pair: &DensityPair, truth: &DensityPair) -> Result<Expansion> {
    if !pair.shares_grid(truth) {
        return Err(Error::GridMismatch);
    }
    let grid = pair.grid();
    let (a0, a1) = pair.grid_values()?;
    let (t0, t1) = truth.grid_values()?;
    let c = Centering::from_grid_values(grid, &a0, &a1, pair.pa1())?;
    let on1 = grid.integrate_with(|i| c.value(a0[i], a1[i], Arm::One) * t1[i])?;
    let on0 = grid.integrate_with(|i| c.value(a0[i], a1[i], Arm::Zero) * t0[i])?;
    Ok(Expansion {
        psi: l2d_plugin(pair)?,
        psi_truth: l2d_plugin(truth)?,
        drift: truth.pa1() * on1 + (1.0 - truth.pa1()) * on0,
        remainder: remainder_r2(pair, truth)?,
    })
}
