//! Before/after comparison of geo-located incident records.
//!
//! Records are windowed around a cutoff date, categories with enough
//! incidents on both sides are kept, and each category's before (arm 0) and
//! after (arm 1) coordinates are compared with [`estimate_l2d`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{estimate_l2d, EstimateOptions, EstimateReport, LabeledDataset};
use crate::points::PointSet;
use crate::svg::{interval_chart, IntervalMark, IntervalRow, PALETTE};

pub const DEFAULT_DAYS: u32 = 80;
pub const DEFAULT_MIN_COUNT: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct IncidentRecord {
    pub category: String,
    pub date: NaiveDate,
    pub lon: f64,
    pub lat: f64,
}

/// Header names of the four columns read from the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnMap {
    pub category: String,
    pub date: String,
    pub lon: String,
    pub lat: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            category: "Category".into(),
            date: "Date".into(),
            lon: "X".into(),
            lat: "Y".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub records: Vec<IncidentRecord>,
    /// Data rows that could not be parsed.
    pub skipped: usize,
    pub total_rows: usize,
}

pub fn ingest_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<Ingested> {
    ingest_reader(File::open(path)?, columns)
}

pub fn ingest_reader<R: Read>(input: R, columns: &ColumnMap) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let idx = [
        find(&columns.category)?,
        find(&columns.date)?,
        find(&columns.lon)?,
        find(&columns.lat)?,
    ];

    let mut records = Vec::new();
    let mut total_rows = 0;
    let mut skipped = 0;
    for row in reader.records() {
        total_rows += 1;
        let parsed = row.ok().and_then(|row| {
            let field = |k: usize| row.get(idx[k]).map(str::trim);
            let category = field(0)?.to_uppercase();
            if category.is_empty() {
                return None;
            }
            let date = parse_date(field(1)?)?;
            let lon: f64 = field(2)?.parse().ok()?;
            let lat: f64 = field(3)?.parse().ok()?;
            (lon.is_finite() && lat.is_finite()).then_some(IncidentRecord {
                category,
                date,
                lon,
                lat,
            })
        });
        match parsed {
            Some(r) => records.push(r),
            None => skipped += 1,
        }
    }
    if 2 * skipped > total_rows {
        return Err(Error::TooManyMalformed {
            malformed: skipped,
            total: total_rows,
        });
    }
    Ok(Ingested {
        records,
        skipped,
        total_rows,
    })
}

/// Day-precision date from `YYYY-MM-DD` or `MM/DD/YYYY`, ignoring any
/// trailing time of day.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let day = s
        .trim()
        .split(|c: char| c == 'T' || c.is_whitespace())
        .next()?;
    NaiveDate::parse_from_str(day, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(day, "%m/%d/%Y"))
        .ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub cutoff: NaiveDate,
    pub days_before: u32,
    pub days_after: u32,
}

impl WindowSpec {
    pub fn new(cutoff: NaiveDate, days_before: u32, days_after: u32) -> Result<Self> {
        if days_before == 0 || days_after == 0 {
            return Err(Error::InvalidArgument(
                "window lengths must be at least one day".into(),
            ));
        }
        Ok(WindowSpec {
            cutoff,
            days_before,
            days_after,
        })
    }

    pub fn with_default_days(cutoff: NaiveDate) -> Self {
        WindowSpec {
            cutoff,
            days_before: DEFAULT_DAYS,
            days_after: DEFAULT_DAYS,
        }
    }

    /// The cutoff day itself belongs to neither window.
    pub fn classify(&self, date: NaiveDate) -> Window {
        let first = self
            .cutoff
            .checked_sub_days(Days::new(self.days_before.into()));
        let last = self
            .cutoff
            .checked_add_days(Days::new(self.days_after.into()));
        if date < self.cutoff && first.is_none_or(|f| date >= f) {
            Window::Before
        } else if date > self.cutoff && last.is_none_or(|l| date <= l) {
            Window::After
        } else {
            Window::Excluded
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Before,
    After,
    Excluded,
}

pub fn window_split(records: &[IncidentRecord], spec: &WindowSpec) -> Vec<Window> {
    records.iter().map(|r| spec.classify(r.date)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryCount {
    pub category: String,
    pub n_before: usize,
    pub n_after: usize,
}

/// Categories with at least `min_count` records in both windows, by total
/// windowed count descending (ties by name).
pub fn eligible_categories(
    records: &[IncidentRecord],
    spec: &WindowSpec,
    min_count: usize,
) -> Vec<CategoryCount> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records {
        let c = counts.entry(&r.category).or_default();
        match spec.classify(r.date) {
            Window::Before => c.0 += 1,
            Window::After => c.1 += 1,
            Window::Excluded => {}
        }
    }
    let mut out: Vec<CategoryCount> = counts
        .into_iter()
        .filter(|(_, (b, a))| *b >= min_count && *a >= min_count)
        .map(|(name, (b, a))| CategoryCount {
            category: name.to_string(),
            n_before: b,
            n_after: a,
        })
        .collect();
    // stable sort keeps name order among equal totals
    out.sort_by_key(|c| std::cmp::Reverse(c.n_before + c.n_after));
    out
}

#[derive(Clone, Debug)]
pub struct GeoOptions {
    pub window: WindowSpec,
    pub min_count: usize,
    /// Multiply longitude by the cosine of the mean latitude.
    pub plate_carree: bool,
    pub estimator: EstimateOptions,
}

impl GeoOptions {
    pub fn new(window: WindowSpec) -> Self {
        GeoOptions {
            window,
            min_count: DEFAULT_MIN_COUNT,
            plate_carree: false,
            estimator: EstimateOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CategoryResult {
    pub category: String,
    pub n_before: usize,
    pub n_after: usize,
    pub report: EstimateReport,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryFailure {
    pub category: String,
    pub n_before: usize,
    pub n_after: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct GeoAnalysis {
    /// Ranked by `psi_tmle` descending.
    pub results: Vec<CategoryResult>,
    pub failures: Vec<CategoryFailure>,
    /// Longitude scale applied before estimation (1 unless plate carree).
    pub lon_scale: f64,
}

pub fn analyze(records: &[IncidentRecord], options: &GeoOptions) -> Result<GeoAnalysis> {
    options.estimator.validate()?;
    let spec = &options.window;
    let eligible = eligible_categories(records, spec, options.min_count);
    if eligible.is_empty() {
        return Err(Error::NoEligibleCategories(options.min_count));
    }

    let windows = window_split(records, spec);
    let mut by_category: BTreeMap<&str, [Vec<[f64; 2]>; 2]> = eligible
        .iter()
        .map(|c| (c.category.as_str(), [Vec::new(), Vec::new()]))
        .collect();
    for (r, w) in records.iter().zip(&windows) {
        let arm = match w {
            Window::Before => 0,
            Window::After => 1,
            Window::Excluded => continue,
        };
        if let Some(arms) = by_category.get_mut(r.category.as_str()) {
            arms[arm].push([r.lon, r.lat]);
        }
    }

    let lon_scale = if options.plate_carree {
        let (sum, count) = by_category
            .values()
            .flat_map(|arms| arms.iter().flatten())
            .fold((0.0, 0usize), |(s, k), p| (s + p[1], k + 1));
        (sum / count as f64).to_radians().cos()
    } else {
        1.0
    };

    let outcomes: Vec<std::result::Result<CategoryResult, CategoryFailure>> = eligible
        .par_iter()
        .map(|c| {
            let arms = &by_category[c.category.as_str()];
            let to_points = |pts: &[[f64; 2]]| {
                let mut set = PointSet::from_2d(pts);
                if lon_scale != 1.0 {
                    set.map_column(0, |x| x * lon_scale);
                }
                set
            };
            LabeledDataset::from_arms(&to_points(&arms[0]), &to_points(&arms[1]))
                .and_then(|data| estimate_l2d(&data, &options.estimator))
                .map(|report| CategoryResult {
                    category: c.category.clone(),
                    n_before: c.n_before,
                    n_after: c.n_after,
                    report,
                })
                .map_err(|e| CategoryFailure {
                    category: c.category.clone(),
                    n_before: c.n_before,
                    n_after: c.n_after,
                    message: e.to_string(),
                })
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    results.sort_by(|a, b| {
        b.report
            .psi_tmle
            .total_cmp(&a.report.psi_tmle)
            .then_with(|| a.category.cmp(&b.category))
    });
    Ok(GeoAnalysis {
        results,
        failures,
        lon_scale,
    })
}

pub const CSV_HEADER: [&str; 10] = [
    "category",
    "n_before",
    "n_after",
    "psi_kernel",
    "psi_tmle",
    "se",
    "ci_kernel_lo",
    "ci_kernel_hi",
    "ci_tmle_lo",
    "ci_tmle_hi",
];

pub fn write_results_csv<W: Write>(results: &[CategoryResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        let e = &r.report;
        w.write_record([
            r.category.clone(),
            r.n_before.to_string(),
            r.n_after.to_string(),
            e.psi_kernel.to_string(),
            e.psi_tmle.to_string(),
            e.se.to_string(),
            e.ci_kernel.lo.to_string(),
            e.ci_kernel.hi.to_string(),
            e.ci_tmle.lo.to_string(),
            e.ci_tmle.hi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per category in result order, kernel and targeted intervals in
/// two colors.
pub fn render_ranking_svg(results: &[CategoryResult], level: f64) -> String {
    let (kernel, tmle) = (PALETTE[0], PALETTE[1]);
    let rows: Vec<IntervalRow> = results
        .iter()
        .map(|r| IntervalRow {
            label: format!("{} ({} / {})", r.category, r.n_before, r.n_after),
            marks: vec![
                IntervalMark {
                    estimate: r.report.psi_kernel,
                    lo: r.report.ci_kernel.lo,
                    hi: r.report.ci_kernel.hi,
                    color: kernel,
                },
                IntervalMark {
                    estimate: r.report.psi_tmle,
                    lo: r.report.ci_tmle.lo,
                    hi: r.report.ci_tmle.hi,
                    color: tmle,
                },
            ],
        })
        .collect();
    interval_chart(
        &format!(
            "L2 distance before vs after, {:.0}% intervals",
            100.0 * level
        ),
        "L2 distance",
        &rows,
        &[("kernel", kernel), ("targeted", tmle)],
    )
}
