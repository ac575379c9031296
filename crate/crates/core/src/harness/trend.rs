//! Early-window versus full-window comparison of the drift columns.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::DiagnosticRow;

use super::csv::read_csv;

/// Allowed growth of a column maximum from the early window to the full run.
pub const TREND_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnTrend {
    pub name: &'static str,
    pub early_max: f64,
    pub full_max: f64,
    pub median: f64,
}

impl ColumnTrend {
    /// `full_max / early_max`, with `0/0 = 1`.
    pub fn ratio(&self) -> f64 {
        if self.early_max == 0.0 && self.full_max == 0.0 {
            1.0
        } else {
            self.full_max / self.early_max
        }
    }

    /// `full_max <= 2 early_max`; false when either is NaN.
    pub fn bounded(&self) -> bool {
        self.full_max <= TREND_FACTOR * self.early_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub split: f64,
    pub t_end: f64,
    pub err_k: ColumnTrend,
    pub err_mk: ColumnTrend,
    pub err_i: ColumnTrend,
    pub err_mi: ColumnTrend,
    /// Printed as a comment line above the report.
    pub note: Option<String>,
}

impl TrendReport {
    /// errMI and errMK stay within the growth factor.
    pub fn modified_bounded(&self) -> bool {
        self.err_mi.bounded() && self.err_mk.bounded()
    }

    /// errI and errK stay within the growth factor.
    pub fn unmodified_bounded(&self) -> bool {
        self.err_i.bounded() && self.err_k.bounded()
    }

    pub fn median_mi_below_i(&self) -> bool {
        self.err_mi.median <= self.err_i.median
    }

    pub fn median_mk_below_k(&self) -> bool {
        self.err_mk.median <= self.err_k.median
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(note) = &self.note {
            let _ = writeln!(out, "# {note}");
        }
        let _ = writeln!(out, "split: {}", self.split);
        let _ = writeln!(out, "t_end: {}", self.t_end);
        for c in [&self.err_k, &self.err_mk, &self.err_i, &self.err_mi] {
            let _ = writeln!(
                out,
                "{}: early_max={:.6e} full_max={:.6e} ratio={:.4} median={:.6e} {}",
                c.name,
                c.early_max,
                c.full_max,
                c.ratio(),
                c.median,
                verdict(c.bounded())
            );
        }
        let _ = writeln!(out, "median_errMI_le_errI: {}", self.median_mi_below_i());
        let _ = writeln!(out, "median_errMK_le_errK: {}", self.median_mk_below_k());
        let _ = writeln!(out, "modified_trend: {}", verdict(self.modified_bounded()));
        out
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Maximum that propagates NaN.
fn nan_max(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, |acc, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) })
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn trend_test(rows: &[DiagnosticRow], split: f64) -> Result<TrendReport> {
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::InvalidInput("trend test needs at least one row".into())),
    };
    if !(split > first && split < last) {
        return Err(Error::InvalidParameter(format!(
            "trend split {split} must lie strictly inside [{first}, {last}]"
        )));
    }
    let column = |name: &'static str, get: fn(&DiagnosticRow) -> f64| ColumnTrend {
        name,
        early_max: nan_max(rows.iter().filter(|r| r.t <= split).map(get)),
        full_max: nan_max(rows.iter().map(get)),
        median: median(rows.iter().map(get).collect()),
    };
    Ok(TrendReport {
        split,
        t_end: last,
        err_k: column("errK", |r| r.err_k),
        err_mk: column("errMK", |r| r.err_mk),
        err_i: column("errI", |r| r.err_i),
        err_mi: column("errMI", |r| r.err_mi),
        note: None,
    })
}

pub fn trend_test_file(path: &Path, split: f64) -> Result<TrendReport> {
    trend_test(&read_csv(path)?, split)
}
