//! Flat CSV renderings of a JSON report.

use std::collections::BTreeSet;

use loadaudit_core::report::{MetricReport, Suite};

use crate::audit::Table;
use crate::io::num;

/// One row per metric across all suites.
pub fn long_table(report: &MetricReport) -> Table {
    let mut t = Table::new("metrics_long.csv", &["suite", "category", "metric", "value", "std", "seed"]);
    for suite in report.present_suites() {
        for m in &report.suite(suite).expect("present").metrics {
            t.rows.push(vec![
                suite.to_string(),
                m.category.to_string(),
                m.name.clone(),
                num(m.value),
                m.std.map(num).unwrap_or_default(),
                m.provenance.seed.map(|s| s.to_string()).unwrap_or_default(),
            ]);
        }
    }
    t
}

/// Categories as rows and metric names as columns; empty cells where a metric
/// is missing for a category.
pub fn pivot_table(report: &MetricReport, suite: Suite) -> Option<Table> {
    let s = report.suite(suite)?;
    let names: BTreeSet<&str> = s.metrics.iter().map(|m| m.name.as_str()).collect();
    let mut header = vec!["category"];
    header.extend(names.iter().copied());
    let mut t = Table::new(&format!("{suite}_by_category.csv"), &header);
    for cat in s.categories() {
        let mut row = vec![cat.to_string()];
        row.extend(names.iter().map(|n| s.get(cat, n).map(|m| num(m.value)).unwrap_or_default()));
        t.rows.push(row);
    }
    Some(t)
}

pub fn report_tables(report: &MetricReport) -> Vec<Table> {
    let mut out = vec![long_table(report)];
    out.extend(report.present_suites().into_iter().filter_map(|s| pivot_table(report, s)));
    out
}
