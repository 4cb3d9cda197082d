//! Error tables, their CSV form and golden-file comparison.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cubature::convergence_order;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "N,errmax1,o1,errmax2,o2,errmax3,o3";

/// Source classes: outside the domain, on its boundary, inside.
pub const CLASSES: [&str; 3] = ["outside", "boundary", "inside"];

/// One row: per-class maximal absolute errors and orders. A class without
/// sources has no error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub n: usize,
    pub errmax: [Option<f64>; 3],
    pub orders: [Option<f64>; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Builds rows from per-`N` errors and fills in the order columns.
    pub fn from_errors(ns: &[usize], errmax: &[[Option<f64>; 3]]) -> Result<Self> {
        if ns.len() != errmax.len() {
            return Err(Error::LengthMismatch { expected: ns.len(), found: errmax.len() });
        }
        let mut rows: Vec<ErrorRow> =
            ns.iter().zip(errmax).map(|(&n, &e)| ErrorRow { n, errmax: e, orders: [None; 3] }).collect();
        for c in 0..3 {
            for k in 1..rows.len() {
                let (Some(a), Some(b)) = (rows[k - 1].errmax[c], rows[k].errmax[c]) else { continue };
                if a > 0.0 && b > 0.0 {
                    rows[k].orders[c] = convergence_order(&[a, b], &[rows[k - 1].n, rows[k].n])?[1];
                }
            }
        }
        Ok(ErrorTable { rows })
    }

    pub fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    /// Column `class` of the error maxima.
    pub fn column(&self, class: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.errmax[class]).collect()
    }

    /// `ln(e_first / e_last) / ln(N_last / N_first)` for one class.
    pub fn overall_order(&self, class: usize) -> Option<f64> {
        let (first, last) = (self.rows.first()?, self.rows.last()?);
        let (a, b) = (first.errmax[class]?, last.errmax[class]?);
        (self.rows.len() > 1 && a > 0.0 && b > 0.0).then(|| (a / b).ln() / (last.n as f64 / first.n as f64).ln())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{}", r.n);
            for c in 0..3 {
                let _ = write!(
                    out,
                    ",{},{}",
                    r.errmax[c].map(format_error).unwrap_or_default(),
                    r.orders[c].map(|o| format!("{o:.1}")).unwrap_or_default()
                );
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => {
                return Err(Error::Csv(format!("expected header `{CSV_HEADER}`, found `{}`", other.unwrap_or(""))))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 7 {
                return Err(Error::Csv(format!("row {}: expected 7 cells, found {}", i + 1, cells.len())));
            }
            let num = |k: usize| -> Result<Option<f64>> {
                if cells[k].is_empty() {
                    return Ok(None);
                }
                cells[k]
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Csv(format!("row {}, column {}: bad number `{}`", i + 1, k, cells[k])))
            };
            let n = cells[0]
                .parse::<usize>()
                .map_err(|_| Error::Csv(format!("row {}: bad N `{}`", i + 1, cells[0])))?;
            rows.push(ErrorRow {
                n,
                errmax: [num(1)?, num(3)?, num(5)?],
                orders: [num(2)?, num(4)?, num(6)?],
            });
        }
        Ok(ErrorTable { rows })
    }
}

/// Five significant digits with a signed two-digit exponent, e.g. `2.5704e-05`.
pub fn format_error(x: f64) -> String {
    let s = format!("{x:.4e}");
    match s.split_once('e') {
        Some((m, e)) => {
            let (sign, digits) = match e.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', e),
            };
            format!("{m}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Tolerances of [`check_golden`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoldenTolerance {
    /// Relative tolerance on errors.
    pub rtol: f64,
    /// Absolute floor on errors.
    pub atol: f64,
    /// Absolute tolerance on orders.
    pub order_tol: f64,
}

impl Default for GoldenTolerance {
    fn default() -> Self {
        GoldenTolerance { rtol: 1e-3, atol: 1e-12, order_tol: 0.5 }
    }
}

/// A failing cell: `row` is the `N` value, `column` the CSV column name.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub n: usize,
    pub column: &'static str,
    pub expected: Option<f64>,
    pub found: Option<f64>,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into());
        write!(f, "N={} {}: expected {}, found {}", self.n, self.column, show(self.expected), show(self.found))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GoldenReport {
    pub mismatches: Vec<Mismatch>,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Cell-by-cell comparison of `table` with `golden`. Errors compare
/// relatively, orders absolutely.
pub fn check_golden(table: &ErrorTable, golden: &ErrorTable, tol: GoldenTolerance) -> Result<GoldenReport> {
    if table.ns() != golden.ns() {
        return Err(Error::Csv(format!("N columns differ: {:?} vs {:?}", table.ns(), golden.ns())));
    }
    const COLUMNS: [[&str; 2]; 3] = [["errmax1", "o1"], ["errmax2", "o2"], ["errmax3", "o3"]];
    let mut report = GoldenReport::default();
    for (t, g) in table.rows.iter().zip(&golden.rows) {
        for c in 0..3 {
            let err_ok = match (t.errmax[c], g.errmax[c]) {
                (Some(a), Some(b)) => (a - b).abs() <= tol.atol + tol.rtol * b.abs(),
                (None, None) => true,
                _ => false,
            };
            if !err_ok {
                report.mismatches.push(Mismatch { n: t.n, column: COLUMNS[c][0], expected: g.errmax[c], found: t.errmax[c] });
            }
            let order_ok = match (t.orders[c], g.orders[c]) {
                (Some(a), Some(b)) => (a - b).abs() <= tol.order_tol,
                (None, None) => true,
                _ => false,
            };
            if !order_ok {
                report.mismatches.push(Mismatch { n: t.n, column: COLUMNS[c][1], expected: g.orders[c], found: t.orders[c] });
            }
        }
    }
    Ok(report)
}
