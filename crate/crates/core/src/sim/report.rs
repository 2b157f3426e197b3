use std::io::Write;

use super::{DesignKind, Method, SimResult};
use crate::error::Result;
use crate::svg::{line_panels, Panel, Series, PALETTE};

pub const CSV_HEADER: [&str; 10] = [
    "design",
    "method",
    "n",
    "R",
    "coverage_oracle",
    "coverage_sample",
    "mse_n",
    "var_n",
    "eff_bound",
    "mean_rounds",
];

pub fn write_results_csv<W: Write>(results: &[SimResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record([
            r.design.name().to_string(),
            r.method.name().to_string(),
            r.n.to_string(),
            r.replicates.to_string(),
            r.coverage_oracle.to_string(),
            r.coverage_sample.to_string(),
            r.mse_times_n.to_string(),
            r.var_times_n.to_string(),
            r.efficiency_bound.to_string(),
            r.mean_rounds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Coverage (left) and n-scaled error (right) against `log2(n / 50)`.
pub fn render_design_svg(design: DesignKind, results: &[SimResult], level: f64) -> String {
    let mine: Vec<&SimResult> = results.iter().filter(|r| r.design == design).collect();
    let x = |r: &SimResult| (r.n as f64 / 50.0).log2();
    let series = |method: Method,
                  dashed: bool,
                  color: &'static str,
                  what: &str,
                  f: &dyn Fn(&SimResult) -> f64| Series {
        label: format!("{} {what}", method.name()),
        color,
        dashed,
        points: mine
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (x(r), f(r)))
            .collect(),
    };
    let kernel_color = PALETTE[0];
    let tmle_color = PALETTE[1];
    let coverage = Panel {
        title: format!("{:.0}% interval coverage", 100.0 * level),
        x_label: "log2(n / 50)".into(),
        y_label: "coverage".into(),
        series: vec![
            series(Method::Kernel, false, kernel_color, "oracle", &|r| {
                r.coverage_oracle
            }),
            series(Method::Kernel, true, kernel_color, "sample", &|r| {
                r.coverage_sample
            }),
            series(Method::Tmle, false, tmle_color, "oracle", &|r| {
                r.coverage_oracle
            }),
            series(Method::Tmle, true, tmle_color, "sample", &|r| {
                r.coverage_sample
            }),
        ],
        reference: Some(level),
    };
    let error = Panel {
        title: "n-scaled error".into(),
        x_label: "log2(n / 50)".into(),
        y_label: "n * MSE, n * Var".into(),
        series: vec![
            series(Method::Kernel, false, kernel_color, "MSE*n", &|r| {
                r.mse_times_n
            }),
            series(Method::Kernel, true, kernel_color, "Var*n", &|r| {
                r.var_times_n
            }),
            series(Method::Tmle, false, tmle_color, "MSE*n", &|r| r.mse_times_n),
            series(Method::Tmle, true, tmle_color, "Var*n", &|r| r.var_times_n),
        ],
        reference: mine.first().map(|r| r.efficiency_bound),
    };
    line_panels(&format!("{design} design"), &[coverage, error])
}
