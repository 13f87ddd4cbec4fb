//! Per-order summary of a sweep: the largest ratio and the trend of the
//! ratio against `log log N`.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ResultRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub k: usize,
    pub cells: usize,
    pub max_ratio: f64,
    /// Cell key of the largest ratio.
    pub max_ratio_cell: String,
    /// Slope of ratio against `log log N`, with one intercept per
    /// `(family, d, p)`. Absent when the grid has a single `N`.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub all_finite: bool,
    /// `slope <= sigmas * slope_stderr` and every ratio finite.
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub stderr: f64,
    pub dof: usize,
}

/// Least-squares slope of `y` on `x` with a separate intercept per group.
pub fn within_group_slope(points: &[(String, f64, f64)]) -> Option<Regression> {
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for (g, x, y) in points {
        groups.entry(g.as_str()).or_default().push((*x, *y));
    }
    let mut centered = Vec::with_capacity(points.len());
    for pts in groups.values() {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        centered.extend(pts.iter().map(|&(x, y)| (x - mx, y - my)));
    }
    let sxx: f64 = centered.iter().map(|c| c.0 * c.0).sum();
    if sxx <= 0.0 || points.len() < groups.len() + 2 {
        return None;
    }
    let slope = centered.iter().map(|c| c.0 * c.1).sum::<f64>() / sxx;
    let dof = points.len() - groups.len() - 1;
    let rss: f64 = centered.iter().map(|&(x, y)| (y - slope * x).powi(2)).sum();
    Some(Regression {
        slope,
        stderr: (rss / dof as f64 / sxx).sqrt(),
        dof,
    })
}

pub fn summarize(records: &[ResultRecord], sigmas: f64) -> Vec<TrendSummary> {
    let mut by_k: BTreeMap<usize, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        by_k.entry(r.k).or_default().push(r);
    }
    by_k.into_iter()
        .map(|(k, rs)| {
            let all_finite = rs.iter().all(|r| r.ratio.is_finite());
            let best = rs
                .iter()
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
                .expect("group is non-empty");
            let points: Vec<(String, f64, f64)> = rs
                .iter()
                .map(|r| (format!("{}/{}/{}", r.family, r.d, r.p), (r.n as f64).ln().ln(), r.ratio))
                .collect();
            let reg = if all_finite { within_group_slope(&points) } else { None };
            let trend_ok = reg.is_none_or(|r| r.slope <= sigmas * r.stderr);
            TrendSummary {
                k,
                cells: rs.len(),
                max_ratio: best.ratio,
                max_ratio_cell: best.cell_key(),
                slope: reg.map(|r| r.slope),
                slope_stderr: reg.map(|r| r.stderr),
                all_finite,
                passed: all_finite && trend_ok,
            }
        })
        .collect()
}

pub fn format_table(rows: &[TrendSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>3} {:>6} {:>10} {:>10} {:>10}  {:<6} max cell",
        "k", "cells", "max ratio", "slope", "stderr", "trend"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>3} {:>6} {:>10.4} {:>10} {:>10}  {:<6} {}",
            r.k,
            r.cells,
            r.max_ratio,
            r.slope.map_or("-".into(), |v| format!("{v:.4}")),
            r.slope_stderr.map_or("-".into(), |v| format!("{v:.4}")),
            if r.passed { "ok" } else { "FAIL" },
            r.max_ratio_cell
        );
    }
    s
}
