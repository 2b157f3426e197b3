//! Targeting step: fluctuate the initial pair along the local least
//! favorable submodel `p_eps = (1 + eps D*(P_n)) p_n` and iterate until the
//! empirical mean of the gradient is negligible.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimator::LabeledDataset;
use crate::gradient::{Centering, DensityPair, GradientField};
use crate::grid::QuadGrid;
use crate::points::{Arm, Density, PointSet};
use crate::stats::mean_sd;

/// Stand-in for an unbounded side of the admissible epsilon interval.
pub const EPSILON_SENTINEL: f64 = 1e6;

/// Fraction of the distance to the positivity boundary that epsilon may use.
const BOUNDARY_MARGIN: f64 = 0.999;

pub const DEFAULT_MAX_ROUNDS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonBounds {
    pub lo: f64,
    pub hi: f64,
    /// Every gradient value was zero: the submodel does not move.
    pub degenerate: bool,
}

/// Largest interval keeping `1 + eps * d > 0` for every supplied gradient value.
pub fn epsilon_bounds(values: &[f64]) -> Result<EpsilonBounds> {
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        max = max.max(v);
        min = min.min(v);
    }
    let degenerate = values.iter().all(|&v| v == 0.0);
    if degenerate {
        return Ok(EpsilonBounds {
            lo: -EPSILON_SENTINEL,
            hi: EPSILON_SENTINEL,
            degenerate,
        });
    }
    let lo = if max > 0.0 {
        -BOUNDARY_MARGIN / max
    } else {
        -EPSILON_SENTINEL
    };
    let hi = if min < 0.0 {
        BOUNDARY_MARGIN / -min
    } else {
        EPSILON_SENTINEL
    };
    Ok(EpsilonBounds { lo, hi, degenerate })
}

/// `sum_i log(1 + eps d_i)`; the epsilon-free initial density factor is dropped.
pub fn epsilon_log_likelihood(eps: f64, d: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (index, &di) in d.iter().enumerate() {
        let m = 1.0 + eps * di;
        if m.is_nan() || m <= 0.0 {
            return Err(Error::EpsilonDomain { eps, index });
        }
        total += m.ln();
    }
    Ok(total)
}

fn score(eps: f64, d: &[f64]) -> (f64, f64) {
    d.iter().fold((0.0, 0.0), |(s, ds), &di| {
        let r = di / (1.0 + eps * di);
        (s + r, ds - r * r)
    })
}

/// Maximizer of the concave submodel log-likelihood on `[lo, hi]`.
///
/// Safeguarded Newton on the score, which is strictly decreasing in `eps`.
/// Returns a boundary when the score does not change sign inside.
pub fn fit_epsilon(d: &[f64], bounds: &EpsilonBounds) -> f64 {
    if bounds.degenerate || d.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let (mut a, mut b) = (bounds.lo, bounds.hi);
    if score(a, d).0 <= 0.0 {
        return a;
    }
    if score(b, d).0 >= 0.0 {
        return b;
    }
    let mut x = 0.0f64.clamp(a, b);
    for _ in 0..500 {
        let (s, ds) = score(x, d);
        if s == 0.0 {
            return x;
        }
        if s > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let mut next = x - s / ds;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-12 || b - a <= 1e-10 {
            break;
        }
    }
    x
}

/// `|mean| <= sd / (sqrt(n) ln n)`, natural logarithm.
pub fn stopping_threshold(sd: f64, n: usize) -> f64 {
    let n = n as f64;
    sd / (n.sqrt() * n.ln())
}

pub fn criterion_met(mean: f64, sd: f64, n: usize) -> bool {
    mean.abs() <= stopping_threshold(sd, n)
}

#[derive(Debug)]
struct FluctuationStep {
    parent: DensityPair,
    centering: Centering,
    epsilon: f64,
}

impl FluctuationStep {
    fn apply(&self, q0: &[f64], q1: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = &self.centering;
        let eps = self.epsilon;
        let mut r0 = Vec::with_capacity(q0.len());
        let mut r1 = Vec::with_capacity(q1.len());
        for (&a, &b) in q0.iter().zip(q1) {
            r0.push(a * (1.0 + eps * c.value(a, b, Arm::Zero)));
            r1.push(b * (1.0 + eps * c.value(a, b, Arm::One)));
        }
        (r0, r1)
    }
}

/// One arm of a targeted pair: `(1 + eps D*(parent)(x, arm)) * parent_arm(x)`.
#[derive(Clone, Debug)]
pub struct FluctuatedDensity {
    step: Arc<FluctuationStep>,
    arm: Arm,
}

impl FluctuatedDensity {
    pub fn epsilon(&self) -> f64 {
        self.step.epsilon
    }

    pub fn arm(&self) -> Arm {
        self.arm
    }

    pub fn base(&self) -> &Arc<dyn Density> {
        self.step.parent.density(self.arm)
    }

    pub(crate) fn shares_step(&self, other: &FluctuatedDensity) -> bool {
        Arc::ptr_eq(&self.step, &other.step)
    }

    /// Evaluates this arm and `other` (the opposite arm of the same step).
    pub(crate) fn eval_pair_with(
        &self,
        other: &FluctuatedDensity,
        points: &PointSet,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        debug_assert!(self.shares_step(other) && self.arm != other.arm);
        let (q0, q1) = self.step.parent.eval_both(points)?;
        Ok(self.step.apply(&q0, &q1))
    }

    fn pick(&self, pair: (Vec<f64>, Vec<f64>)) -> Vec<f64> {
        match self.arm {
            Arm::Zero => pair.0,
            Arm::One => pair.1,
        }
    }
}

impl Density for FluctuatedDensity {
    fn dim(&self) -> usize {
        self.base().dim()
    }

    fn eval(&self, points: &PointSet) -> Result<Vec<f64>> {
        let (q0, q1) = self.step.parent.eval_both(points)?;
        Ok(self.pick(self.step.apply(&q0, &q1)))
    }

    fn eval_grid(&self, grid: &QuadGrid) -> Result<Vec<f64>> {
        let parent = &self.step.parent;
        let (q0, q1) = if **parent.grid() == *grid {
            parent.grid_values()?
        } else {
            parent.eval_both(grid.points())?
        };
        Ok(self.pick(self.step.apply(&q0, &q1)))
    }

    fn as_fluctuated(&self) -> Option<&FluctuatedDensity> {
        Some(self)
    }
}

fn fluctuate_pair(pair: &DensityPair, centering: Centering, epsilon: f64) -> Result<DensityPair> {
    let step = Arc::new(FluctuationStep {
        parent: pair.clone(),
        centering,
        epsilon,
    });
    let p0 = Arc::new(FluctuatedDensity {
        step: step.clone(),
        arm: Arm::Zero,
    });
    let p1 = Arc::new(FluctuatedDensity {
        step,
        arm: Arm::One,
    });
    DensityPair::new(p0, p1, pair.pa1(), pair.grid().clone())
}

/// Pair values cached on the grid and at the observations.
#[derive(Clone, Debug)]
pub(crate) struct Tabulated {
    pub grid0: Vec<f64>,
    pub grid1: Vec<f64>,
    pub obs0: Vec<f64>,
    pub obs1: Vec<f64>,
}

impl Tabulated {
    pub(crate) fn evaluate(pair: &DensityPair, data: &LabeledDataset) -> Result<Self> {
        let (grid0, grid1) = pair.grid_values()?;
        let (obs0, obs1) = pair.eval_both(data.points())?;
        Ok(Self {
            grid0,
            grid1,
            obs0,
            obs1,
        })
    }

    pub(crate) fn centering(&self, grid: &QuadGrid, pa1: f64) -> Result<Centering> {
        Centering::from_grid_values(grid, &self.grid0, &self.grid1, pa1)
    }

    /// `D*(X_i, A_i)` for every observation.
    pub(crate) fn observation_gradient(&self, c: &Centering, labels: &[Arm]) -> Vec<f64> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &a)| c.value(self.obs0[i], self.obs1[i], a))
            .collect()
    }

    /// Both arms' gradient values on the grid and at every observation: the
    /// set on which the fluctuated densities must stay positive.
    fn positivity_set(&self, c: &Centering) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * (self.grid0.len() + self.obs0.len()));
        for (p0, p1) in [(&self.grid0, &self.grid1), (&self.obs0, &self.obs1)] {
            for (&a, &b) in p0.iter().zip(p1.iter()) {
                out.push(c.value(a, b, Arm::Zero));
                out.push(c.value(a, b, Arm::One));
            }
        }
        out
    }

    fn fluctuate(&mut self, c: &Centering, eps: f64) {
        for (p0, p1) in [
            (&mut self.grid0, &mut self.grid1),
            (&mut self.obs0, &mut self.obs1),
        ] {
            for (a, b) in p0.iter_mut().zip(p1.iter_mut()) {
                let (x0, x1) = (*a, *b);
                *a = x0 * (1.0 + eps * c.value(x0, x1, Arm::Zero));
                *b = x1 * (1.0 + eps * c.value(x0, x1, Arm::One));
            }
        }
    }
}

/// Result of the targeting loop.
#[derive(Clone, Debug)]
pub struct TmleFit {
    /// One entry per update round.
    pub epsilons: Vec<f64>,
    pub final_pair: DensityPair,
    /// Empirical mean of `D*(P_n*)` over the observations.
    pub pn_d_star: f64,
    /// Empirical standard deviation of `D*(P_n*)` (n - 1 divisor).
    pub sd_d: f64,
    pub criterion_met: bool,
    pub rounds: usize,
    /// The round budget ran out before the stopping criterion held.
    pub exhausted: bool,
}

pub(crate) struct TargetingRun {
    pub fit: TmleFit,
    /// Plug-in L2 distance of the initial pair.
    pub initial_psi: f64,
    pub tabulated: Tabulated,
    pub initial_gradient: Vec<f64>,
    pub final_gradient: Vec<f64>,
}

/// A single fluctuation of `pair` in the direction of `field`.
///
/// Returns the pair unchanged with `eps = 0` when the gradient vanishes.
pub fn tmle_update(
    pair: &DensityPair,
    field: &GradientField,
    data: &LabeledDataset,
) -> Result<(DensityPair, f64)> {
    check_dataset(pair, data)?;
    let tab = Tabulated::evaluate(pair, data)?;
    let c = field.centering();
    let bounds = epsilon_bounds(&tab.positivity_set(&c))?;
    if bounds.degenerate {
        return Ok((pair.clone(), 0.0));
    }
    let eps = fit_epsilon(&tab.observation_gradient(&c, data.labels()), &bounds);
    Ok((fluctuate_pair(pair, c, eps)?, eps))
}

/// Repeated update rounds until `|P_n D*| <= sd / (sqrt(n) ln n)` or the
/// round budget is spent.
pub fn tmle_targeting_loop(
    pair: &DensityPair,
    data: &LabeledDataset,
    max_rounds: usize,
) -> Result<TmleFit> {
    run_targeting(pair, data, max_rounds).map(|run| run.fit)
}

fn check_dataset(pair: &DensityPair, data: &LabeledDataset) -> Result<()> {
    if data.dim() != pair.grid().dims() {
        return Err(Error::DimensionMismatch {
            expected: pair.grid().dims(),
            got: data.dim(),
        });
    }
    Ok(())
}

pub(crate) fn run_targeting(
    pair: &DensityPair,
    data: &LabeledDataset,
    max_rounds: usize,
) -> Result<TargetingRun> {
    if max_rounds == 0 {
        return Err(Error::InvalidArgument(
            "max_rounds must be at least 1".into(),
        ));
    }
    check_dataset(pair, data)?;
    let grid = pair.grid().clone();
    let n = data.len();
    let labels = data.labels();

    let mut tab = Tabulated::evaluate(pair, data)?;
    let mut current = pair.clone();
    let mut c = tab.centering(&grid, pair.pa1())?;
    let mut d = tab.observation_gradient(&c, labels);
    let initial_gradient = d.clone();
    let initial_psi = grid.integrate_with(|i| (tab.grid1[i] - tab.grid0[i]).powi(2))?;
    let mut epsilons = Vec::new();
    let (mut mean, mut sd) = mean_sd(&d);
    let mut met = false;

    for _ in 0..max_rounds {
        let bounds = epsilon_bounds(&tab.positivity_set(&c))?;
        let eps = fit_epsilon(&d, &bounds);
        epsilons.push(eps);
        if eps != 0.0 {
            tab.fluctuate(&c, eps);
            current = fluctuate_pair(&current, c, eps)?;
            c = tab.centering(&grid, pair.pa1())?;
            d = tab.observation_gradient(&c, labels);
        }
        (mean, sd) = mean_sd(&d);
        met = criterion_met(mean, sd, n);
        if met {
            break;
        }
    }

    Ok(TargetingRun {
        fit: TmleFit {
            rounds: epsilons.len(),
            epsilons,
            final_pair: current,
            pn_d_star: mean,
            sd_d: sd,
            criterion_met: met,
            exhausted: !met,
        },
        initial_psi,
        tabulated: tab,
        initial_gradient,
        final_gradient: d,
    })
}
