//! `l2d`: estimate, simulate and compare L2 distances between densities.

mod config;
mod input;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use l2d_core::geo::{self, ColumnMap, GeoOptions, WindowSpec};
use l2d_core::sim::{self, DesignKind, LadderConfig, SimDesign};
use l2d_core::{estimate_l2d, BandwidthRule, EstimateOptions, EstimateReport, SeSource};

const SUBCOMMANDS: [&str; 3] = ["estimate", "simulate", "geo"];

#[derive(Parser)]
#[command(
    name = "l2d",
    version,
    about = "Targeted estimation of the L2 distance between two densities",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the distance between the two arms of a labeled sample
    Estimate(EstimateCmd),
    /// Monte Carlo coverage and efficiency study on the analytic designs
    Simulate(SimulateCmd),
    /// Rank incident categories by how much their spatial density changed
    Geo(GeoCmd),
}

#[derive(Args)]
struct Common {
    /// Plain-text `key = value` file of flag values; explicit flags win
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandwidthArg {
    PlugIn,
    NormalReference,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeArg {
    /// Gradient at the targeted fit
    Targeted,
    /// Gradient at the initial kernel fit
    Kernel,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Quadrature nodes per dimension [default: 401 for 1-D, 201 for 2-D]
    #[arg(long, value_name = "N")]
    points: Option<usize>,
    /// Grid padding beyond the data range, in bandwidths
    #[arg(long, default_value_t = 4.0)]
    padding: f64,
    /// Kernel bandwidth selector
    #[arg(long, value_enum, default_value = "plug-in")]
    bandwidth: BandwidthArg,
    /// Bandwidth per dimension when `--bandwidth fixed`, comma separated
    #[arg(long, value_name = "H[,H]", value_parser = parse_list::<f64>)]
    fixed_h: Option<List<f64>>,
    /// Confidence level of the Wald intervals, in (0, 1)
    #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
    level: f64,
    /// Maximum number of targeting rounds
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    max_rounds: u32,
    /// Fit whose canonical gradient gives the standard error of both intervals
    #[arg(long, value_enum, default_value = "targeted")]
    se_source: SeArg,
}

#[derive(Args)]
struct EstimateCmd {
    /// CSV of coordinates followed by a 0/1 label; header row optional
    input: PathBuf,
    /// Also write the report as a one-row CSV
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateCmd {
    /// gaussian, triangle, uniform or all
    #[arg(long, default_value = "all")]
    design: String,
    /// Sample sizes per arm, comma separated
    #[arg(long = "n", value_name = "N,...", value_parser = parse_list::<usize>,
          default_value = "50,100,200,400,800,1600,3200,6400,12800")]
    n_values: List<usize>,
    /// Replicates per sample size
    #[arg(long, default_value_t = sim::DEFAULT_REPLICATES)]
    replicates: usize,
    /// Master seed; every replicate seed derives from it
    #[arg(long, default_value_t = 20170909)]
    seed: u64,
    /// Directory for sim_results.csv and one sim_<design>.svg per design
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GeoCmd {
    /// Incident CSV with a header row
    input: PathBuf,
    #[arg(long, default_value = "Category")]
    category_col: String,
    /// Date column, `YYYY-MM-DD` or `MM/DD/YYYY` with optional time
    #[arg(long, default_value = "Date")]
    date_col: String,
    #[arg(long, default_value = "X")]
    lon_col: String,
    #[arg(long, default_value = "Y")]
    lat_col: String,
    /// Intervention date; incidents on this day are excluded
    #[arg(long, default_value = "2017-09-09", value_parser = parse_day)]
    cutoff: NaiveDate,
    #[arg(long, default_value_t = geo::DEFAULT_DAYS, value_parser = clap::value_parser!(u32).range(1..))]
    days_before: u32,
    #[arg(long, default_value_t = geo::DEFAULT_DAYS, value_parser = clap::value_parser!(u32).range(1..))]
    days_after: u32,
    /// Minimum incidents in each window for a category to be analyzed
    #[arg(long, default_value_t = geo::DEFAULT_MIN_COUNT)]
    min_count: usize,
    /// Scale longitude by the cosine of the mean latitude
    #[arg(long)]
    plate_carree: bool,
    #[arg(long, default_value = "results.csv", value_name = "PATH")]
    results: PathBuf,
    #[arg(long, default_value = "ranking.svg", value_name = "PATH")]
    chart: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    common: Common,
}

/// A comma-separated list parsed as one value, so a later flag replaces an
/// earlier one instead of appending to it.
#[derive(Clone, Debug)]
struct List<T>(Vec<T>);

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<List<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items = s
        .split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(List(items))
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn parse_day(s: &str) -> Result<NaiveDate, String> {
    geo::parse_date(s).ok_or_else(|| format!("{s:?} is not a YYYY-MM-DD or MM/DD/YYYY date"))
}

impl EstimatorArgs {
    fn options(&self) -> Result<EstimateOptions> {
        let bandwidth = match (self.bandwidth, &self.fixed_h) {
            (BandwidthArg::PlugIn, _) => BandwidthRule::PlugIn,
            (BandwidthArg::NormalReference, _) => BandwidthRule::NormalReference,
            (BandwidthArg::Fixed, Some(h)) => BandwidthRule::Fixed(h.0.clone()),
            (BandwidthArg::Fixed, None) => bail!("--bandwidth fixed needs --fixed-h"),
        };
        let options = EstimateOptions {
            points_per_dim: self.points,
            grid_padding_bandwidths: self.padding,
            bandwidth,
            level: self.level,
            max_rounds: self.max_rounds as usize,
            se_source: match self.se_source {
                SeArg::Targeted => SeSource::TargetedFit,
                SeArg::Kernel => SeSource::KernelFit,
            },
        };
        options.validate()?;
        Ok(options)
    }
}

impl Common {
    fn init_pool(&self) -> Result<()> {
        if let Some(j) = self.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(j.into())
                .build_global()
                .context("starting worker pool")?;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn print_report(out: &mut impl Write, r: &EstimateReport) -> io::Result<()> {
    let pct = 100.0 * r.level;
    writeln!(out, "n0 / n1        {} / {}", r.n0, r.n1)?;
    writeln!(out, "psi_kernel     {:.6}", r.psi_kernel)?;
    writeln!(out, "psi_tmle       {:.6}", r.psi_tmle)?;
    writeln!(out, "se             {:.6}", r.se)?;
    writeln!(
        out,
        "{pct:.0}% CI kernel  [{:.6}, {:.6}]",
        r.ci_kernel.lo, r.ci_kernel.hi
    )?;
    writeln!(
        out,
        "{pct:.0}% CI tmle    [{:.6}, {:.6}]",
        r.ci_tmle.lo, r.ci_tmle.hi
    )?;
    writeln!(out, "rounds         {}", r.tmle.rounds)?;
    writeln!(out, "criterion_met  {}", r.tmle.criterion_met)
}

fn write_report_csv(path: &Path, r: &EstimateReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "n0",
        "n1",
        "psi_kernel",
        "psi_tmle",
        "se",
        "level",
        "ci_kernel_lo",
        "ci_kernel_hi",
        "ci_tmle_lo",
        "ci_tmle_hi",
        "rounds",
        "criterion_met",
    ])?;
    w.write_record([
        r.n0.to_string(),
        r.n1.to_string(),
        r.psi_kernel.to_string(),
        r.psi_tmle.to_string(),
        r.se.to_string(),
        r.level.to_string(),
        r.ci_kernel.lo.to_string(),
        r.ci_kernel.hi.to_string(),
        r.ci_tmle.lo.to_string(),
        r.ci_tmle.hi.to_string(),
        r.tmle.rounds.to_string(),
        r.tmle.criterion_met.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn run_estimate(cmd: EstimateCmd) -> Result<()> {
    cmd.common.init_pool()?;
    let options = cmd.estimator.options()?;
    let file =
        File::open(&cmd.input).with_context(|| format!("opening {}", cmd.input.display()))?;
    let data =
        input::read_labeled(file).with_context(|| format!("reading {}", cmd.input.display()))?;
    let report = estimate_l2d(&data, &options)?;
    print_report(&mut io::stdout().lock(), &report)?;
    if let Some(path) = &cmd.output {
        write_report_csv(path, &report)?;
    }
    Ok(())
}

fn run_simulate(cmd: SimulateCmd) -> Result<()> {
    cmd.common.init_pool()?;
    let designs: Vec<DesignKind> = if cmd.design == "all" {
        DesignKind::ALL.to_vec()
    } else {
        vec![cmd.design.parse()?]
    };
    if cmd.replicates < 2 {
        bail!("--replicates must be at least 2");
    }
    let config = LadderConfig {
        n_values: cmd.n_values.0.clone(),
        replicates: cmd.replicates,
        master_seed: cmd.seed,
        options: cmd.estimator.options()?,
    };
    fs::create_dir_all(&cmd.out_dir)
        .with_context(|| format!("creating {}", cmd.out_dir.display()))?;

    let mut results = Vec::new();
    for kind in &designs {
        eprintln!(
            "simulating {kind}: n = {:?}, R = {}",
            config.n_values, config.replicates
        );
        results.extend(sim::run_ladder(&SimDesign::new(*kind), &config)?);
    }
    let failed: usize = results.iter().map(|r| r.failures).sum();
    if failed > 0 {
        eprintln!("warning: {failed} replicate estimate(s) failed and were left out");
    }
    sim::write_results_csv(&results, create(&cmd.out_dir.join("sim_results.csv"))?)?;
    for kind in &designs {
        let svg = sim::render_design_svg(*kind, &results, config.options.level);
        let path = cmd.out_dir.join(format!("sim_{}.svg", kind.name()));
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "wrote {} rows to {}",
        results.len(),
        cmd.out_dir.join("sim_results.csv").display()
    );
    Ok(())
}

fn run_geo(cmd: GeoCmd) -> Result<()> {
    cmd.common.init_pool()?;
    let columns = ColumnMap {
        category: cmd.category_col.clone(),
        date: cmd.date_col.clone(),
        lon: cmd.lon_col.clone(),
        lat: cmd.lat_col.clone(),
    };
    let ingested = geo::ingest_csv(&cmd.input, &columns)
        .with_context(|| format!("reading {}", cmd.input.display()))?;
    if ingested.skipped > 0 {
        eprintln!(
            "skipped {} of {} malformed row(s)",
            ingested.skipped, ingested.total_rows
        );
    }
    let options = GeoOptions {
        window: WindowSpec::new(cmd.cutoff, cmd.days_before, cmd.days_after)?,
        min_count: cmd.min_count,
        plate_carree: cmd.plate_carree,
        estimator: cmd.estimator.options()?,
    };
    let analysis = geo::analyze(&ingested.records, &options)?;
    for f in &analysis.failures {
        eprintln!(
            "category {} ({} / {}) failed: {}",
            f.category, f.n_before, f.n_after, f.message
        );
    }
    geo::write_results_csv(&analysis.results, create(&cmd.results)?)?;
    let svg = geo::render_ranking_svg(&analysis.results, options.estimator.level);
    create(&cmd.chart)?.write_all(svg.as_bytes())?;

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<32} {:>8} {:>8} {:>10} {:>10} {:>10}",
        "category", "before", "after", "psi_kernel", "psi_tmle", "se"
    )?;
    for r in &analysis.results {
        writeln!(
            out,
            "{:<32} {:>8} {:>8} {:>10.6} {:>10.6} {:>10.6}",
            r.category, r.n_before, r.n_after, r.report.psi_kernel, r.report.psi_tmle, r.report.se
        )?;
    }
    Ok(())
}

fn run(args: Vec<OsString>) -> Result<()> {
    let args = config::expand_args(args, &SUBCOMMANDS)?;
    match Cli::parse_from(args).command {
        Command::Estimate(c) => run_estimate(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Geo(c) => run_geo(c),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
