//! Reading labeled samples for `estimate`: one row per observation, the
//! coordinates followed by a 0/1 label in the last column. A header row is
//! detected when the first row is not numeric.

use std::io::Read;

use anyhow::{bail, Result};
use l2d_core::{Arm, LabeledDataset, PointSet};

/// Reported malformed rows are capped at this many.
const MAX_LISTED: usize = 10;

pub fn read_labeled<R: Read>(input: R) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut problems = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let line = k + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {line}: {e}"));
                continue;
            }
        };
        if row.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && row.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        match parse_row(&row, width) {
            Ok((x, a)) => {
                width.get_or_insert(x.len());
                coords.extend(x);
                labels.push(a);
            }
            Err(why) => problems.push(format!("row {line}: {why}")),
        }
    }
    if !problems.is_empty() {
        let shown = problems
            .iter()
            .take(MAX_LISTED)
            .cloned()
            .collect::<Vec<_>>()
            .join("\n  ");
        let more = problems.len().saturating_sub(MAX_LISTED);
        let tail = if more > 0 {
            format!("\n  ... and {more} more")
        } else {
            String::new()
        };
        bail!(
            "{} malformed input row(s):\n  {shown}{tail}",
            problems.len()
        );
    }
    let Some(dim) = width else {
        bail!("input has no data rows");
    };
    Ok(LabeledDataset::new(PointSet::new(dim, coords)?, labels)?)
}

fn parse_row(
    row: &csv::StringRecord,
    width: Option<usize>,
) -> std::result::Result<(Vec<f64>, Arm), String> {
    let fields: Vec<&str> = row.iter().collect();
    let dim = fields.len().saturating_sub(1);
    if !(1..=2).contains(&dim) {
        return Err(format!("expected 2 or 3 columns, found {}", fields.len()));
    }
    if let Some(w) = width.filter(|w| *w != dim) {
        return Err(format!(
            "expected {} columns, found {}",
            w + 1,
            fields.len()
        ));
    }
    let mut x = Vec::with_capacity(dim);
    for f in &fields[..dim] {
        match f.parse::<f64>() {
            Ok(v) if v.is_finite() => x.push(v),
            _ => return Err(format!("invalid coordinate {f:?}")),
        }
    }
    let label = fields[dim];
    let arm = match label {
        "0" => Arm::Zero,
        "1" => Arm::One,
        _ => return Err(format!("label must be 0 or 1, found {label:?}")),
    };
    Ok((x, arm))
}
