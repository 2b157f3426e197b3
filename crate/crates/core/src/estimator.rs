//! End-to-end L2 distance estimation from labeled samples.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gradient::{centering_constants, DensityPair};
use crate::grid::{build_grid, DEFAULT_POINTS_1D, DEFAULT_POINTS_2D};
use crate::kde::{kde_fit, normal_reference_bandwidth, plug_in_bandwidth, Bandwidth};
use crate::points::{Arm, PointSet};
use crate::stats::{mean_sd, normal_quantile};
use crate::tmle::{run_targeting, DEFAULT_MAX_ROUNDS};

/// `n` observations `(X_i, A_i)` with `X_i` in R^d, d in {1, 2}.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    points: PointSet,
    labels: Vec<Arm>,
    n0: usize,
    n1: usize,
}

impl LabeledDataset {
    pub fn new(points: PointSet, labels: Vec<Arm>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        points.ensure_finite()?;
        let n1 = labels.iter().filter(|a| **a == Arm::One).count();
        let n0 = labels.len() - n1;
        if n0.min(n1) < 2 {
            return Err(Error::TooFewObservations {
                need: 2,
                got: n0.min(n1),
            });
        }
        Ok(Self {
            points,
            labels,
            n0,
            n1,
        })
    }

    /// Arm 0 observations followed by arm 1 observations.
    pub fn from_arms(x0: &PointSet, x1: &PointSet) -> Result<Self> {
        if x0.dim() != x1.dim() {
            return Err(Error::DimensionMismatch {
                expected: x0.dim(),
                got: x1.dim(),
            });
        }
        let mut labels = vec![Arm::Zero; x0.len()];
        labels.resize(x0.len() + x1.len(), Arm::One);
        Self::new(x0.concat(x1), labels)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn labels(&self) -> &[Arm] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Empirical `P(A = 1)`.
    pub fn pa1(&self) -> f64 {
        self.n1 as f64 / self.len() as f64
    }

    pub fn arm_points(&self, arm: Arm) -> PointSet {
        let coords = self
            .points
            .iter()
            .zip(&self.labels)
            .filter(|(_, a)| **a == arm)
            .flat_map(|(p, _)| p.iter().copied())
            .collect();
        PointSet::new(self.dim(), coords).expect("dimension already validated")
    }

    pub fn with_flipped_labels(&self) -> LabeledDataset {
        LabeledDataset {
            points: self.points.clone(),
            labels: self.labels.iter().map(|a| a.flip()).collect(),
            n0: self.n1,
            n1: self.n0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BandwidthRule {
    PlugIn,
    NormalReference,
    /// Per-dimension scales shared by both arms.
    Fixed(Vec<f64>),
}

impl BandwidthRule {
    pub fn select(&self, sample: &PointSet) -> Result<Bandwidth> {
        match self {
            BandwidthRule::PlugIn => plug_in_bandwidth(sample),
            BandwidthRule::NormalReference => normal_reference_bandwidth(sample),
            BandwidthRule::Fixed(h) => {
                if h.len() != sample.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: sample.dim(),
                        got: h.len(),
                    });
                }
                Bandwidth::fixed(h.clone())
            }
        }
    }
}

/// Which gradient supplies the standard error shared by both intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeSource {
    /// `D*` at the initial kernel fit.
    KernelFit,
    /// `D*` at the targeted fit.
    TargetedFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    /// `None` picks 401 nodes for 1-D data and 201 per axis for 2-D data.
    pub points_per_dim: Option<usize>,
    /// Grid extends this many bandwidths beyond the pooled data range.
    pub grid_padding_bandwidths: f64,
    pub bandwidth: BandwidthRule,
    pub level: f64,
    pub max_rounds: usize,
    pub se_source: SeSource,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            points_per_dim: None,
            grid_padding_bandwidths: 4.0,
            bandwidth: BandwidthRule::PlugIn,
            level: 0.95,
            max_rounds: DEFAULT_MAX_ROUNDS,
            se_source: SeSource::TargetedFit,
        }
    }
}

impl EstimateOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.points_per_dim {
            if m < 3 {
                return Err(Error::InvalidArgument(format!(
                    "points_per_dim must be at least 3, got {m}"
                )));
            }
        }
        if !(self.grid_padding_bandwidths.is_finite() && self.grid_padding_bandwidths >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid padding must be a nonnegative number of bandwidths, got {}",
                self.grid_padding_bandwidths
            )));
        }
        check_level(self.level)?;
        if self.max_rounds == 0 {
            return Err(Error::InvalidArgument(
                "max_rounds must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn points_for_dim(&self, dim: usize) -> usize {
        self.points_per_dim.unwrap_or(if dim == 1 {
            DEFAULT_POINTS_1D
        } else {
            DEFAULT_POINTS_2D
        })
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TmleSummary {
    pub epsilons: Vec<f64>,
    pub rounds: usize,
    pub criterion_met: bool,
    pub pn_d_star: f64,
    pub sd_d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub bounds: Vec<(f64, f64)>,
    pub points_per_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub n0: usize,
    pub n1: usize,
    /// Plug-in from the initial kernel fits.
    pub psi_kernel: f64,
    /// Plug-in from the targeted fits.
    pub psi_tmle: f64,
    /// Standard error used by both intervals (see [`SeSource`]).
    pub se: f64,
    pub se_kernel: f64,
    pub se_tmle: f64,
    pub level: f64,
    pub ci_kernel: Interval,
    pub ci_tmle: Interval,
    pub tmle: TmleSummary,
    pub grid: GridSpec,
    /// Arm 0, arm 1.
    pub bandwidths: [Bandwidth; 2],
}

/// `integral (p1 - p0)^2` on the pair's grid.
pub fn l2d_plugin(pair: &DensityPair) -> Result<f64> {
    let (g0, g1) = pair.grid_values()?;
    pair.grid().integrate_with(|i| (g1[i] - g0[i]).powi(2))
}

/// Empirical SD of `D*(pair)` over the observations, divided by `sqrt(n)`.
pub fn influence_se(pair: &DensityPair, data: &LabeledDataset) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::TooFewObservations {
            need: 2,
            got: data.len(),
        });
    }
    if (pair.pa1() - data.pa1()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "pair has P(A = 1) = {} but the data has {}",
            pair.pa1(),
            data.pa1()
        )));
    }
    let field = centering_constants(pair)?;
    let (q0, q1) = pair.eval_both(data.points())?;
    let c = field.centering();
    let d: Vec<f64> = data
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &a)| c.value(q0[i], q1[i], a))
        .collect();
    Ok(se_from_gradient(&d))
}

fn se_from_gradient(d: &[f64]) -> f64 {
    mean_sd(d).1 / (d.len() as f64).sqrt()
}

/// `psi +- z_{(1 + level) / 2} se`, never truncated at zero.
pub fn wald_ci(psi: f64, se: f64, level: f64) -> Result<Interval> {
    check_level(level)?;
    if !(se >= 0.0 && se.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "standard error must be finite and nonnegative, got {se}"
        )));
    }
    let half = normal_quantile(0.5 * (1.0 + level)) * se;
    Ok(Interval {
        lo: psi - half,
        hi: psi + half,
    })
}

/// Kernel plug-in and targeted estimates of the L2 distance between the two
/// arms' densities, with Wald intervals.
pub fn estimate_l2d(data: &LabeledDataset, options: &EstimateOptions) -> Result<EstimateReport> {
    options.validate()?;
    let x0 = data.arm_points(Arm::Zero);
    let x1 = data.arm_points(Arm::One);
    let bw0 = options.bandwidth.select(&x0)?;
    let bw1 = options.bandwidth.select(&x1)?;
    let k0 = kde_fit(&x0, &bw0)?;
    let k1 = kde_fit(&x1, &bw1)?;

    let m = options.points_for_dim(data.dim());
    let bounds: Vec<(f64, f64)> = data
        .points()
        .bounds()
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| {
            let pad = options.grid_padding_bandwidths * bw0.scales()[j].max(bw1.scales()[j]);
            (lo - pad, hi + pad)
        })
        .collect();
    let grid = Arc::new(build_grid(&bounds, m)?);
    let pair = DensityPair::new(Arc::new(k0), Arc::new(k1), data.pa1(), grid.clone())?;

    let run = run_targeting(&pair, data, options.max_rounds)?;
    let tab = &run.tabulated;
    let psi_kernel = run.initial_psi;
    let psi_tmle = grid.integrate_with(|i| (tab.grid1[i] - tab.grid0[i]).powi(2))?;

    let se_kernel = se_from_gradient(&run.initial_gradient);
    let se_tmle = se_from_gradient(&run.final_gradient);
    let se = match options.se_source {
        SeSource::KernelFit => se_kernel,
        SeSource::TargetedFit => se_tmle,
    };
    let fit = run.fit;

    Ok(EstimateReport {
        n0: data.n0(),
        n1: data.n1(),
        psi_kernel,
        psi_tmle,
        se,
        se_kernel,
        se_tmle,
        level: options.level,
        ci_kernel: wald_ci(psi_kernel, se, options.level)?,
        ci_tmle: wald_ci(psi_tmle, se, options.level)?,
        tmle: TmleSummary {
            epsilons: fit.epsilons,
            rounds: fit.rounds,
            criterion_met: fit.criterion_met,
            pn_d_star: fit.pn_d_star,
            sd_d: fit.sd_d,
        },
        grid: GridSpec {
            bounds,
            points_per_dim: m,
        },
        bandwidths: [bw0, bw1],
    })
}
