#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn l2d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l2d"))
        .args(args)
        .output()
        .expect("running l2d")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub const CUTOFF: &str = "2017-09-09";
pub const SHIFTED: &str = "DRUG/NARCOTIC";
pub const ELIGIBLE: [&str; 3] = [SHIFTED, "LARCENY/THEFT", "VANDALISM"];

/// (category, before, after, shifted)
const CATEGORIES: [(&str, usize, usize, bool); 5] = [
    (SHIFTED, 400, 400, true),
    ("LARCENY/THEFT", 400, 400, false),
    ("VANDALISM", 300, 300, false),
    ("ARSON", 99, 200, false),
    ("BRIBERY", 40, 40, false),
];

/// Incident CSV with five categories: one whose after-window points are its
/// before-window points shifted by a constant, two unshifted, and two below
/// the 100-per-window threshold. Also includes rows on the cutoff day, rows
/// outside both windows and malformed rows, none of which may be counted.
pub fn write_geo_fixture(path: &Path, seed: u64) {
    let cutoff = NaiveDate::parse_from_str(CUTOFF, "%Y-%m-%d").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lon = Normal::new(-122.42, 0.02).unwrap();
    let lat = Normal::new(37.77, 0.02).unwrap();
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["IncidntNum", "Category", "Date", "X", "Y"])
        .unwrap();
    let mut id = 0u32;
    let mut row =
        |w: &mut csv::Writer<std::fs::File>, cat: &str, date: String, x: String, y: String| {
            id += 1;
            w.write_record([id.to_string(), cat.to_string(), date, x, y])
                .unwrap();
        };
    for (cat, before, after, shifted) in CATEGORIES {
        let mut first = Vec::new();
        for k in 0..before {
            let p = (lon.sample(&mut rng), lat.sample(&mut rng));
            first.push(p);
            let d = cutoff - Days::new(rng.random_range(1..=80));
            // alternate the two accepted date formats
            let date = if k % 2 == 0 {
                d.format("%Y-%m-%d").to_string()
            } else {
                d.format("%m/%d/%Y 12:00:00 AM").to_string()
            };
            row(&mut w, cat, date, p.0.to_string(), p.1.to_string());
        }
        for &(x, y) in first.iter().cycle().take(after) {
            let p = if shifted {
                (x + 0.02, y + 0.02)
            } else {
                (lon.sample(&mut rng), lat.sample(&mut rng))
            };
            let d = cutoff + Days::new(rng.random_range(1..=80));
            row(
                &mut w,
                cat,
                d.format("%Y-%m-%d").to_string(),
                p.0.to_string(),
                p.1.to_string(),
            );
        }
        for d in [cutoff, cutoff - Days::new(81), cutoff + Days::new(81)] {
            for _ in 0..5 {
                row(
                    &mut w,
                    cat,
                    d.format("%Y-%m-%d").to_string(),
                    "-122.4".into(),
                    "37.7".into(),
                );
            }
        }
        row(
            &mut w,
            cat,
            "2017-09-01".into(),
            String::new(),
            "37.7".into(),
        );
        row(
            &mut w,
            cat,
            "not a date".into(),
            "-122.4".into(),
            "37.7".into(),
        );
    }
    w.flush().unwrap();
}

/// Category names in the order they appear in a results CSV.
pub fn result_categories(csv_text: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    r.records().map(|rec| rec.unwrap()[0].to_string()).collect()
}
