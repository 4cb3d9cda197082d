//! Running an experiment: reference values, the `N` sweep and the checks.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, IntegrandKind, MetricChoice, Pipeline};
use super::table::{ErrorTable, CLASSES};
use crate::bspline::BSplineWeight;
use crate::cubature::{CubatureRule, IntegrandSampler};
use crate::error::{Error, Result};
use crate::geometry::{first_fundamental_form, jacobian, BuiltinSurface, MetricMatrix, Surface};
use crate::oracle::{oracle_integrate, OracleKernel, OracleRequest};
use crate::quasi_interp::qi_scheme;
use crate::{Point2, Rect};

const SHIPPED_REFERENCES: &str = include_str!("../../data/reference_values.csv");

/// Where the reference values of a run came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceOrigin {
    Shipped,
    Oracle,
}

/// Reference ("exact") values per source point: the shipped table, with the
/// oracle as fallback, or the oracle only.
#[derive(Clone, Debug)]
pub struct ReferenceStore {
    shipped: HashMap<(u8, usize, [u64; 2]), f64>,
}

impl ReferenceStore {
    /// The table compiled into the library.
    pub fn shipped() -> Result<Self> {
        Self::parse(SHIPPED_REFERENCES)
    }

    /// An empty store: every reference is computed by the oracle.
    pub fn oracle_only() -> Self {
        ReferenceStore { shipped: HashMap::new() }
    }

    /// Parses `example,d,s1,s2,value` rows.
    pub fn parse(text: &str) -> Result<Self> {
        let mut shipped = HashMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Csv(format!("reference row {}: `{line}`", i + 1));
            if cells.len() != 5 {
                return Err(bad());
            }
            let example: u8 = cells[0].parse().map_err(|_| bad())?;
            let d: usize = cells[1].parse().map_err(|_| bad())?;
            let s: [f64; 2] = [cells[2].parse().map_err(|_| bad())?, cells[3].parse().map_err(|_| bad())?];
            let v: f64 = cells[4].parse().map_err(|_| bad())?;
            shipped.insert((example, d, [s[0].to_bits(), s[1].to_bits()]), v);
        }
        Ok(ReferenceStore { shipped })
    }

    pub fn len(&self) -> usize {
        self.shipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shipped.is_empty()
    }

    /// References for every source of `cfg`.
    pub fn references(&self, cfg: &ExperimentConfig) -> Result<(Vec<f64>, ReferenceOrigin)> {
        if let Some(id) = cfg.reference_id() {
            let found: Option<Vec<f64>> = cfg
                .sources
                .iter()
                .map(|s| self.shipped.get(&(id, cfg.d, [s[0].to_bits(), s[1].to_bits()])).copied())
                .collect();
            if let Some(v) = found {
                return Ok((v, ReferenceOrigin::Shipped));
            }
        }
        Ok((oracle_references(cfg)?, ReferenceOrigin::Oracle))
    }
}

/// Rows `example,d,s1,s2,value` for the four presets with `d ∈ {2, 3}`,
/// computed by the oracle.
pub fn reference_csv(target: f64) -> Result<String> {
    let mut out = String::from("example,d,s1,s2,value\n");
    for example in 1..=4 {
        for d in [2, 3] {
            let mut cfg = ExperimentConfig::preset(example)?;
            cfg.d = d;
            cfg.oracle_target = target;
            for (s, v) in cfg.sources.iter().zip(oracle_references(&cfg)?) {
                out.push_str(&format!("{example},{d},{},{},{v:e}\n", s[0], s[1]));
            }
        }
    }
    Ok(out)
}

/// The pieces shared by the rule and the oracle for one configuration.
struct Setup {
    weight: BSplineWeight,
    surface: Option<Arc<BuiltinSurface>>,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let weight = BSplineWeight::uniform([cfg.d, cfg.d], Rect::reference())?;
        let surface = cfg.problem.surface.as_ref().map(|s| s.build().map(Arc::new)).transpose()?;
        Ok(Setup { weight, surface })
    }

    fn surface(&self) -> Result<Arc<BuiltinSurface>> {
        self.surface.clone().ok_or_else(|| Error::Config("field `surface`: required".into()))
    }

    /// `f_s` (direct pipeline) or `g_s` (extraction pipelines).
    fn integrand(&self, kind: IntegrandKind, s: Point2) -> Result<IntegrandSampler> {
        Ok(match kind {
            IntegrandKind::One => IntegrandSampler::new(s, |_| 1.0),
            IntegrandKind::Quadratic => IntegrandSampler::new(s, |t| t[0] * t[0] + t[1] * t[1]),
            IntegrandKind::Exp => IntegrandSampler::new(s, |t| (t[0] * t[1]).exp()),
            IntegrandKind::Jacobian => {
                let x = self.surface()?;
                IntegrandSampler::new(s, move |t| jacobian(x.as_ref(), t).unwrap_or(f64::NAN))
            }
            IntegrandKind::HelmholtzJacobian { k } => {
                let x = self.surface()?;
                let xs = x.point(s);
                IntegrandSampler::new(s, move |t| {
                    let xt = x.point(t);
                    let r = ((xt[0] - xs[0]).powi(2) + (xt[1] - xs[1]).powi(2) + (xt[2] - xs[2]).powi(2)).sqrt();
                    jacobian(x.as_ref(), t).unwrap_or(f64::NAN) * (k * r).cos()
                })
            }
        })
    }

    fn metric(&self, choice: MetricChoice, s: Point2) -> Result<MetricMatrix> {
        match choice {
            MetricChoice::Identity => Ok(MetricMatrix::identity()),
            MetricChoice::Constant([e, f, g]) => MetricMatrix::new(e, f, g),
            MetricChoice::Surface => first_fundamental_form(self.surface()?.as_ref(), s),
        }
    }
}

/// Oracle values of the exact integrals for every source of `cfg`.
pub fn oracle_references(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let setup = Setup::new(cfg)?;
    cfg.sources
        .par_iter()
        .map(|&s| {
            let f = setup.integrand(cfg.problem.integrand, s)?;
            let kernel = if cfg.problem.physical() {
                OracleKernel::Surface(setup.surface()? as Arc<dyn Surface>)
            } else {
                OracleKernel::Metric(setup.metric(cfg.problem.metric, s)?)
            };
            let w = setup.weight.clone();
            let req = OracleRequest::scalar(move |t| w.eval(t) * f.eval(t), setup.weight.support())
                .with_kernel(kernel, s)
                .with_breaks(setup.weight.knots_u().to_vec(), setup.weight.knots_v().to_vec())
                .with_target(cfg.oracle_target);
            Ok(oracle_integrate(&req)?.value())
        })
        .collect()
}

/// 0 outside the domain, 1 on its boundary, 2 inside.
pub fn classify(domain: &Rect, s: Point2) -> usize {
    let tol = 1e-12 * domain.diameter();
    if !domain.contains(s, tol) {
        0
    } else if [s[0] - domain.u[0], domain.u[1] - s[0], s[1] - domain.v[0], domain.v[1] - s[1]]
        .iter()
        .any(|g| g.abs() <= tol)
    {
        1
    } else {
        2
    }
}

/// Everything produced by [`run`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub table: ErrorTable,
    /// Per `N`, per class: maximal relative error.
    pub max_relative: Vec<[Option<f64>; 3]>,
    /// Per `N`: rule values in source order.
    pub values: Vec<Vec<f64>>,
    pub references: Vec<f64>,
    pub origin: ReferenceOrigin,
}

/// Applies the rule of every `N` at every source and tabulates the errors.
pub fn run(cfg: &ExperimentConfig, refs: &ReferenceStore) -> Result<RunReport> {
    cfg.validate()?;
    let (references, origin) = refs.references(cfg)?;
    let setup = Setup::new(cfg)?;
    let scheme = qi_scheme(&cfg.qi_scheme)?;
    let domain = setup.weight.support();
    let classes: Vec<usize> = cfg.sources.iter().map(|&s| classify(&domain, s)).collect();
    let mut errmax = Vec::with_capacity(cfg.ns.len());
    let mut max_relative = Vec::with_capacity(cfg.ns.len());
    let mut values = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let rule = CubatureRule::with_scheme(setup.weight.clone(), cfg.p, n, scheme, cfg.quad.clone())?;
        let vals: Vec<f64> = cfg
            .sources
            .par_iter()
            .map(|&s| evaluate(&rule, &setup, cfg, s))
            .collect::<Result<_>>()?;
        let mut abs = [None::<f64>; 3];
        let mut rel = [None::<f64>; 3];
        for ((v, r), &c) in vals.iter().zip(&references).zip(&classes) {
            let e = (v - r).abs();
            if !e.is_finite() {
                return Err(Error::NonFinite(f64::NAN, f64::NAN));
            }
            abs[c] = Some(abs[c].map_or(e, |m| m.max(e)));
            let q = if *r != 0.0 { e / r.abs() } else { e };
            rel[c] = Some(rel[c].map_or(q, |m| m.max(q)));
        }
        errmax.push(abs);
        max_relative.push(rel);
        values.push(vals);
    }
    let table = ErrorTable::from_errors(&cfg.ns, &errmax)?;
    Ok(RunReport { config: cfg.clone(), table, max_relative, values, references, origin })
}

fn evaluate(rule: &CubatureRule, setup: &Setup, cfg: &ExperimentConfig, s: Point2) -> Result<f64> {
    let f = setup.integrand(cfg.problem.integrand, s)?;
    match cfg.problem.pipeline {
        Pipeline::Direct => rule.integrate_weakly_singular(&f, &setup.metric(cfg.problem.metric, s)?, s),
        Pipeline::Multiplicative => rule.integrate_multiplicative(setup.surface()?.as_ref(), &f, s),
        Pipeline::Subtractive => rule.integrate_subtractive(setup.surface()?.as_ref(), &f, s),
    }
}

/// [`run`] with references recomputed by the oracle.
pub fn oracle_table(example: u8, d: usize, p: usize, ns: &[usize]) -> Result<ErrorTable> {
    let mut cfg = ExperimentConfig::preset(example)?;
    cfg.d = d;
    cfg.p = p;
    cfg.ns = ns.to_vec();
    Ok(run(&cfg, &ReferenceStore::oracle_only())?.table)
}

/// Outcome of one tolerance check of `--check` mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Largest relative error of a report, over all `N` and classes.
pub fn max_relative_error(report: &RunReport) -> f64 {
    report.max_relative.iter().flatten().flatten().fold(0.0, |m, &e| m.max(e))
}

/// `true` when `errors` never increases, allowing one increase of at most 10%.
pub fn nonincreasing_with_slack(errors: &[f64]) -> bool {
    let ups: Vec<f64> = errors.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] / w[0]).collect();
    ups.is_empty() || (ups.len() == 1 && ups[0] <= 1.1)
}

/// The tolerance checks that apply to the report's example.
pub fn checks(report: &RunReport) -> Vec<Check> {
    let cfg = &report.config;
    let table = &report.table;
    let mut out = Vec::new();
    match cfg.example {
        Some(1) => {
            let worst = max_relative_error(report);
            out.push(Check {
                name: "EXACTNESS".into(),
                passed: worst <= 1e-10,
                detail: format!("max relative error {worst:.3e} (limit 1e-10)"),
            });
        }
        Some(2) => {
            for (c, class) in CLASSES.iter().enumerate() {
                let col: Vec<f64> = table.column(c).into_iter().flatten().collect();
                if col.len() < 2 {
                    continue;
                }
                let order = table.overall_order(c).unwrap_or(f64::NAN);
                let limit = cfg.p as f64 + 0.7;
                out.push(Check {
                    name: format!("ORDER {class}"),
                    passed: order >= limit,
                    detail: format!("order over N {:?}: {order:.2} (limit {limit:.1})", cfg.ns),
                });
                out.push(Check {
                    name: format!("DECREASING {class}"),
                    passed: col.windows(2).all(|w| w[1] < w[0]),
                    detail: fmt_list(&col),
                });
            }
        }
        Some(3 | 4) => {
            for (c, class) in CLASSES.iter().enumerate() {
                let col: Vec<f64> = table.column(c).into_iter().flatten().collect();
                out.push(Check {
                    name: format!("MONOTONE {class}"),
                    passed: nonincreasing_with_slack(&col),
                    detail: fmt_list(&col),
                });
            }
            if cfg.example == Some(3) && cfg.d == 2 && cfg.p == 2 {
                if let Some(row) = table.rows.iter().find(|r| r.n == 14) {
                    let e = row.errmax[2].unwrap_or(f64::NAN);
                    out.push(Check {
                        name: "MAGNITUDE inside N=14".into(),
                        passed: (2e-6..=5e-5).contains(&e),
                        detail: format!("{e:.3e} (accepted 2e-6..5e-5)"),
                    });
                }
            }
        }
        _ => {}
    }
    out
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

/// Sidecar metadata written next to the CSV.
#[derive(Clone, Debug, Serialize)]
pub struct RunMeta<'a> {
    pub example: Option<u8>,
    pub d: usize,
    pub p: usize,
    pub pipeline: Pipeline,
    pub qi_scheme: &'a str,
    pub config_hash: String,
    pub timestamp: u64,
    pub references: ReferenceOrigin,
    pub config: &'a ExperimentConfig,
}

/// `out.csv` gets `out.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Writes the CSV and its metadata sidecar.
pub fn write_outputs(report: &RunReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, report.table.to_csv())?;
    let cfg = &report.config;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = RunMeta {
        example: cfg.example,
        d: cfg.d,
        p: cfg.p,
        pipeline: cfg.problem.pipeline,
        qi_scheme: &cfg.qi_scheme,
        config_hash: cfg.hash(),
        timestamp,
        references: report.origin,
        config: cfg,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Csv(e.to_string()))?;
    std::fs::write(meta_path(path), json)?;
    Ok(())
}
