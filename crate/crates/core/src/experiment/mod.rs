//! Experiment presets, error tables and golden files.
//!
//! The four presets share the source grid `𝒮²` with
//! `𝒮 = {−1.1, −1, −0.5, 0, 0.5, 1, 1.1}` and sweep `N ∈ {6, 8, …, 14}`:
//!
//! 1. `f = t₁² + t₂²`, `A = I` (exactness, `N = 6` only).
//! 2. `f = exp(t₁ t₂)`, `A = I`.
//! 3. Cylinder of radius 2, multiplicative pipeline with `g = J`.
//! 4. Hyperboloid, `f = J cos(π/2 ‖X(t) − X(s)‖)` with `A = A(s)`.

mod config;
mod runner;
mod table;

pub use config::{
    parse_metric, source_grid, ExperimentConfig, IntegrandKind, MetricChoice, Overrides, Pipeline, Problem,
    SurfaceSpec, DEFAULT_NS, SOURCE_COORDS,
};
pub use runner::{
    checks, classify, max_relative_error, meta_path, nonincreasing_with_slack, oracle_references, oracle_table,
    reference_csv, run, write_outputs, Check, ReferenceOrigin, ReferenceStore, RunMeta, RunReport,
};
pub use table::{check_golden, format_error, ErrorRow, ErrorTable, GoldenReport, GoldenTolerance, Mismatch, CLASSES, CSV_HEADER};

macro_rules! golden_files {
    ($($e:literal $d:literal $p:literal),* $(,)?) => {
        /// Shipped golden table of preset `example` at `(d, p)`.
        pub fn shipped_golden(example: u8, d: usize, p: usize) -> Option<&'static str> {
            match (example, d, p) {
                $(($e, $d, $p) => Some(include_str!(concat!("../../data/golden/ex", $e, "_d", $d, "_p", $p, ".csv"))),)*
                _ => None,
            }
        }
    };
}

golden_files!(
    1 2 2, 1 2 3, 1 3 2, 1 3 3,
    2 2 2, 2 2 3, 2 3 2, 2 3 3,
    3 2 2, 3 2 3, 3 3 2, 3 3 3,
    4 2 2, 4 2 3, 4 3 2, 4 3 3,
);
