//! Monte Carlo study of the kernel plug-in and targeted estimators on three
//! analytic designs with known L2 distance.

mod report;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use report::{render_design_svg, write_results_csv, CSV_HEADER};

use crate::analytic::AnalyticDensity;
use crate::error::{Error, Result};
use crate::estimator::{estimate_l2d, EstimateOptions, LabeledDataset};
use crate::gradient::{efficiency_bound, DensityPair};
use crate::grid::{build_grid, QuadGrid};
use crate::points::{Arm, PointSet};
use crate::stats::{mean_sd, normal_quantile};

/// Default desk-scale ladder `50 * 2^k` up to 12800.
pub const DEFAULT_LADDER: [usize; 9] = [50, 100, 200, 400, 800, 1600, 3200, 6400, 12800];
pub const DEFAULT_REPLICATES: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignKind {
    Gaussian,
    Triangle,
    Uniform,
}

impl DesignKind {
    pub const ALL: [DesignKind; 3] = [
        DesignKind::Gaussian,
        DesignKind::Triangle,
        DesignKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Gaussian => "gaussian",
            DesignKind::Triangle => "triangle",
            DesignKind::Uniform => "uniform",
        }
    }

    fn tag(self) -> u64 {
        match self {
            DesignKind::Gaussian => 1,
            DesignKind::Triangle => 2,
            DesignKind::Uniform => 3,
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(DesignKind::Gaussian),
            "triangle" => Ok(DesignKind::Triangle),
            "uniform" => Ok(DesignKind::Uniform),
            _ => Err(Error::UnknownDesign(s.to_string())),
        }
    }
}

/// Two shifted copies of one analytic density, sampled in equal numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct SimDesign {
    pub kind: DesignKind,
    pub p0: AnalyticDensity,
    pub p1: AnalyticDensity,
    pub true_psi: f64,
    pub pa1: f64,
}

pub fn make_design(name: &str) -> Result<SimDesign> {
    Ok(SimDesign::new(name.parse()?))
}

impl SimDesign {
    pub fn new(kind: DesignKind) -> Self {
        let (p0, p1, true_psi) = match kind {
            DesignKind::Gaussian => (
                AnalyticDensity::Gaussian { mean: 0.0, sd: 0.5 },
                AnalyticDensity::Gaussian { mean: 0.5, sd: 0.5 },
                2.0 / std::f64::consts::PI.sqrt() * (1.0 - (-0.25f64).exp()),
            ),
            DesignKind::Triangle => (
                AnalyticDensity::Triangle {
                    center: 0.0,
                    half_width: 1.0,
                },
                AnalyticDensity::Triangle {
                    center: 0.5,
                    half_width: 1.0,
                },
                0.375,
            ),
            DesignKind::Uniform => (
                AnalyticDensity::Uniform { lo: 0.0, hi: 1.0 },
                AnalyticDensity::Uniform { lo: 0.1, hi: 1.1 },
                0.2,
            ),
        };
        Self {
            kind,
            p0,
            p1,
            true_psi,
            pa1: 0.5,
        }
    }

    pub fn density(&self, arm: Arm) -> AnalyticDensity {
        match arm {
            Arm::Zero => self.p0,
            Arm::One => self.p1,
        }
    }

    /// Fine grid on which the analytic truth is integrated. Discontinuities
    /// and kinks of the non-smooth designs fall on grid nodes.
    pub fn truth_grid(&self) -> Result<QuadGrid> {
        match self.kind {
            DesignKind::Gaussian => build_grid(&[(-6.0, 6.5)], 5001),
            DesignKind::Triangle => build_grid(&[(-1.5, 2.0)], 7001),
            DesignKind::Uniform => build_grid(&[(-0.5, 1.6)], 21_001),
        }
    }

    pub fn truth_pair(&self) -> Result<DensityPair> {
        self.truth_pair_on(Arc::new(self.truth_grid()?))
    }

    pub fn truth_pair_on(&self, grid: Arc<QuadGrid>) -> Result<DensityPair> {
        DensityPair::new(Arc::new(self.p0), Arc::new(self.p1), self.pa1, grid)
    }

    /// `Var(D*(P0))` at equal arm sizes.
    pub fn efficiency_bound(&self) -> Result<f64> {
        efficiency_bound(&self.truth_pair()?)
    }
}

/// `n` draws from each arm of the design; arm 0 first.
pub fn sample_design(design: &SimDesign, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = (0..n).map(|_| design.p0.sample(&mut rng)).collect();
    let x1: Vec<f64> = (0..n).map(|_| design.p1.sample(&mut rng)).collect();
    LabeledDataset::from_arms(&PointSet::from_1d(x0), &PointSet::from_1d(x1))
}

/// Both arms drawn from the design's arm-0 density (true distance zero).
pub fn sample_null(design: &SimDesign, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..2 * n).map(|_| design.p0.sample(&mut rng)).collect();
    let (x0, x1) = x.split_at(n);
    LabeledDataset::from_arms(
        &PointSet::from_1d(x0.to_vec()),
        &PointSet::from_1d(x1.to_vec()),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// The design's two shifted densities.
    Alternative,
    /// Both arms from arm 0's density.
    Null,
}

impl Scenario {
    fn tag(self) -> u64 {
        match self {
            Scenario::Alternative => 0,
            Scenario::Null => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Kernel,
    Tmle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kernel => "kernel",
            Method::Tmle => "tmle",
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `r`: a pure function of its coordinates in the study.
pub fn replicate_seed(
    master: u64,
    design: DesignKind,
    scenario: Scenario,
    n: usize,
    r: usize,
) -> u64 {
    [design.tag(), scenario.tag(), n as u64, r as u64]
        .iter()
        .fold(mix(master), |acc, &v| mix(acc ^ v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateOutcome {
    pub psi_kernel: f64,
    pub psi_tmle: f64,
    pub se_kernel: f64,
    pub se_tmle: f64,
    pub rounds: usize,
    pub criterion_met: bool,
}

impl ReplicateOutcome {
    pub fn psi(&self, method: Method) -> f64 {
        match method {
            Method::Kernel => self.psi_kernel,
            Method::Tmle => self.psi_tmle,
        }
    }

    pub fn se(&self, method: Method) -> f64 {
        match method {
            Method::Kernel => self.se_kernel,
            Method::Tmle => self.se_tmle,
        }
    }
}

/// All replicates of one (design, scenario, n) cell, in replicate order.
#[derive(Clone, Debug)]
pub struct CellRun {
    pub design: DesignKind,
    pub scenario: Scenario,
    pub n: usize,
    pub seed_base: u64,
    pub outcomes: Vec<ReplicateOutcome>,
    /// `(replicate index, message)` for replicates whose estimation failed.
    pub failures: Vec<(usize, String)>,
}

/// Runs `replicates` independent estimations; replicates may execute on any
/// thread, results are merged in replicate order.
pub fn run_cell(
    design: &SimDesign,
    scenario: Scenario,
    n: usize,
    replicates: usize,
    master_seed: u64,
    options: &EstimateOptions,
) -> Result<CellRun> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample size {n} is below 2"
        )));
    }
    options.validate()?;
    let results: Vec<std::result::Result<ReplicateOutcome, String>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(master_seed, design.kind, scenario, n, r);
            let data = match scenario {
                Scenario::Alternative => sample_design(design, n, seed),
                Scenario::Null => sample_null(design, n, seed),
            }
            .map_err(|e| e.to_string())?;
            let report = estimate_l2d(&data, options).map_err(|e| e.to_string())?;
            Ok(ReplicateOutcome {
                psi_kernel: report.psi_kernel,
                psi_tmle: report.psi_tmle,
                se_kernel: report.se_kernel,
                se_tmle: report.se_tmle,
                rounds: report.tmle.rounds,
                criterion_met: report.tmle.criterion_met,
            })
        })
        .collect();

    let mut outcomes = Vec::with_capacity(replicates);
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(msg) => failures.push((r, msg)),
        }
    }
    Ok(CellRun {
        design: design.kind,
        scenario,
        n,
        seed_base: replicate_seed(master_seed, design.kind, scenario, n, 0),
        outcomes,
        failures,
    })
}

/// Coverage and error metrics of one method in one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub design: DesignKind,
    pub method: Method,
    pub n: usize,
    /// Replicates that produced an estimate.
    pub replicates: usize,
    /// Coverage with the SD of the replicate estimates as standard error.
    pub coverage_oracle: f64,
    /// Coverage with each replicate's own influence-curve standard error.
    pub coverage_sample: f64,
    pub mse_times_n: f64,
    pub var_times_n: f64,
    pub efficiency_bound: f64,
    pub mean_rounds: f64,
    pub seed_base: u64,
    pub failures: usize,
}

impl SimResult {
    /// `truth` is the true distance, `level` the nominal interval coverage.
    pub fn summarize(
        cell: &CellRun,
        method: Method,
        truth: f64,
        efficiency_bound: f64,
        level: f64,
    ) -> Result<SimResult> {
        let r = cell.outcomes.len();
        if r < 2 {
            return Err(Error::TooFewObservations { need: 2, got: r });
        }
        let z = normal_quantile(0.5 * (1.0 + level));
        let psi: Vec<f64> = cell.outcomes.iter().map(|o| o.psi(method)).collect();
        let (mean, oracle_se) = mean_sd(&psi);
        let covered = |se: &dyn Fn(usize) -> f64| {
            psi.iter()
                .enumerate()
                .filter(|(i, p)| (truth - **p).abs() <= z * se(*i))
                .count() as f64
                / r as f64
        };
        let coverage_oracle = covered(&|_| oracle_se);
        let coverage_sample = covered(&|i| cell.outcomes[i].se(method));
        let n = cell.n as f64;
        let mse = psi.iter().map(|p| (p - truth).powi(2)).sum::<f64>() / r as f64;
        let var = psi.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / r as f64;
        let mean_rounds = match method {
            Method::Kernel => 0.0,
            Method::Tmle => cell.outcomes.iter().map(|o| o.rounds as f64).sum::<f64>() / r as f64,
        };
        Ok(SimResult {
            design: cell.design,
            method,
            n: cell.n,
            replicates: r,
            coverage_oracle,
            coverage_sample,
            mse_times_n: n * mse,
            var_times_n: n * var,
            efficiency_bound,
            mean_rounds,
            seed_base: cell.seed_base,
            failures: cell.failures.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderConfig {
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub options: EstimateOptions,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_LADDER.to_vec(),
            replicates: DEFAULT_REPLICATES,
            master_seed: 20_170_909,
            options: EstimateOptions::default(),
        }
    }
}

/// Kernel and targeted results for every ladder point, kernel first.
pub fn run_ladder(design: &SimDesign, config: &LadderConfig) -> Result<Vec<SimResult>> {
    if config.n_values.is_empty() {
        return Err(Error::InvalidArgument("empty sample-size ladder".into()));
    }
    if config.replicates < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replicates, got {}",
            config.replicates
        )));
    }
    let bound = design.efficiency_bound()?;
    let mut out = Vec::with_capacity(2 * config.n_values.len());
    for &n in &config.n_values {
        let cell = run_cell(
            design,
            Scenario::Alternative,
            n,
            config.replicates,
            config.master_seed,
            &config.options,
        )?;
        for method in [Method::Kernel, Method::Tmle] {
            out.push(SimResult::summarize(
                &cell,
                method,
                design.true_psi,
                bound,
                config.options.level,
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
