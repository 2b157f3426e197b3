//! Global bandwidth selectors for the Gaussian kernel.
//!
//! The plug-in selector is the classical two-stage direct plug-in: a
//! normal-scale estimate of the sixth-derivative functional sets the pilot
//! for the fourth-derivative functional, which in turn sets the pilot for the
//! integrated squared second derivative that enters the AMISE-optimal `h`.
//! Density-derivative functionals are estimated from linearly binned counts.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Number of bins used for the functional estimates.
const BIN_COUNT: usize = 401;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    PlugIn,
    NormalReference,
    Fixed,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selector::PlugIn => "plug-in",
            Selector::NormalReference => "normal-reference",
            Selector::Fixed => "fixed",
        })
    }
}

/// Diagonal bandwidth: one positive scale per dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Bandwidth {
    h: Vec<f64>,
    selector: Selector,
}

impl Bandwidth {
    pub fn fixed(h: Vec<f64>) -> Result<Self> {
        Self::with_selector(h, Selector::Fixed)
    }

    fn with_selector(h: Vec<f64>, selector: Selector) -> Result<Self> {
        if !(1..=2).contains(&h.len()) {
            return Err(Error::UnsupportedDimension(h.len()));
        }
        if let Some(bad) = h.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidBandwidth(format!(
                "scale {bad} is not positive and finite"
            )));
        }
        Ok(Self { h, selector })
    }

    pub fn scales(&self) -> &[f64] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn selector(&self) -> Selector {
        self.selector
    }

    pub fn max_scale(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }
}

fn column_sd(sample: &PointSet, j: usize) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewObservations { need: 2, got: n });
    }
    let col = sample.column(j);
    let mean = col.iter().sum::<f64>() / n as f64;
    let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    // relative test so that a constant column at a large offset is caught
    let scale = mean.abs().max(f64::MIN_POSITIVE);
    if !sd.is_finite() || sd <= 1e-14 * scale || sd == 0.0 {
        return Err(Error::DegenerateDimension { dim: j });
    }
    Ok(sd)
}

/// Normal-scale rule `h_j = sd_j * (4 / ((d + 2) n))^(1 / (d + 4))`.
pub fn normal_reference_bandwidth(sample: &PointSet) -> Result<Bandwidth> {
    sample.ensure_finite()?;
    let d = sample.dim() as f64;
    let n = sample.len() as f64;
    let factor = (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0));
    let h = (0..sample.dim())
        .map(|j| column_sd(sample, j).map(|sd| sd * factor))
        .collect::<Result<Vec<_>>>()?;
    Bandwidth::with_selector(h, Selector::NormalReference)
}

/// Two-stage direct plug-in bandwidth, applied per coordinate.
pub fn plug_in_bandwidth(sample: &PointSet) -> Result<Bandwidth> {
    sample.ensure_finite()?;
    let n = sample.len();
    if n < 4 {
        return Err(Error::TooFewObservations { need: 4, got: n });
    }
    let h = (0..sample.dim())
        .map(|j| {
            let sd = column_sd(sample, j)?;
            Ok(direct_plug_in(&sample.column(j), sd))
        })
        .collect::<Result<Vec<_>>>()?;
    Bandwidth::with_selector(h, Selector::PlugIn)
}

/// r-th derivative of the standard normal density, r in {4, 6}.
pub(crate) fn normal_derivative(r: u32, z: f64) -> f64 {
    let z2 = z * z;
    let hermite = match r {
        4 => (z2 - 6.0) * z2 + 3.0,
        6 => ((z2 - 15.0) * z2 + 45.0) * z2 - 15.0,
        _ => unreachable!("only even orders 4 and 6 are used"),
    };
    hermite * (-0.5 * z2).exp() / (2.0 * PI).sqrt()
}

/// Normal-scale value of `psi_r = integral f^(r/2)^2 (-1)^(r/2)` for N(0, sd^2).
fn normal_scale_functional(r: u32, sd: f64) -> f64 {
    let sqrt_pi = PI.sqrt();
    match r {
        4 => 3.0 / (8.0 * sqrt_pi * sd.powi(5)),
        6 => -15.0 / (16.0 * sqrt_pi * sd.powi(7)),
        8 => 105.0 / (32.0 * sqrt_pi * sd.powi(9)),
        _ => unreachable!(),
    }
}

fn direct_plug_in(x: &[f64], sd: f64) -> f64 {
    let n = x.len() as f64;
    let bins = LinearBins::new(x);

    // stage 1: pilot for psi_6 from the normal-scale psi_8
    let psi8 = normal_scale_functional(8, sd);
    let g6 = (-2.0 * normal_derivative(6, 0.0) / (psi8 * n)).powf(1.0 / 9.0);
    let mut psi6 = bins.functional(6, g6);
    if psi6.is_nan() || psi6 >= 0.0 {
        psi6 = normal_scale_functional(6, sd);
    }

    // stage 2: pilot for psi_4
    let g4 = (-2.0 * normal_derivative(4, 0.0) / (psi6 * n)).powf(1.0 / 7.0);
    let mut psi4 = bins.functional(4, g4);
    if psi4.is_nan() || psi4 <= 0.0 {
        psi4 = normal_scale_functional(4, sd);
    }

    // AMISE minimizer with R(K) = 1 / (2 sqrt(pi)) and unit kernel variance
    let roughness = 1.0 / (2.0 * PI.sqrt());
    (roughness / (psi4 * n)).powf(0.2)
}

/// Linear binning of a univariate sample onto `BIN_COUNT` equally spaced nodes.
struct LinearBins {
    counts: Vec<f64>,
    delta: f64,
    n: f64,
}

impl LinearBins {
    fn new(x: &[f64]) -> Self {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = BIN_COUNT;
        let delta = (hi - lo) / (m - 1) as f64;
        let mut counts = vec![0.0; m];
        for &v in x {
            let pos = (v - lo) / delta;
            let j = (pos.floor() as usize).min(m - 2);
            let frac = pos - j as f64;
            counts[j] += 1.0 - frac;
            counts[j + 1] += frac;
        }
        Self {
            counts,
            delta,
            n: x.len() as f64,
        }
    }

    /// Binned estimate of `n^-2 g^-(r+1) sum_i sum_j phi^(r)((X_i - X_j) / g)`.
    fn functional(&self, r: u32, g: f64) -> f64 {
        let m = self.counts.len();
        let c = &self.counts;
        let mut total = normal_derivative(r, 0.0) * c.iter().map(|v| v * v).sum::<f64>();
        for lag in 1..m {
            let z = lag as f64 * self.delta / g;
            if z > 40.0 {
                break;
            }
            let k = normal_derivative(r, z);
            let cross: f64 = c[..m - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
            total += 2.0 * k * cross;
        }
        total / (self.n * self.n * g.powi(r as i32 + 1))
    }
}
