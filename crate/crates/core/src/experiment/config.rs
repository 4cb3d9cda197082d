//! Experiment manifests: presets, TOML files and command-line overrides.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{builtin_surface, BuiltinSurface, MetricMatrix};
use crate::singular_kernel::SingularQuadConfig;
use crate::Point2;

/// Coordinates of the default source grid; sources are all pairs.
pub const SOURCE_COORDS: [f64; 7] = [-1.1, -1.0, -0.5, 0.0, 0.5, 1.0, 1.1];

/// Default list of breakpoint counts.
pub const DEFAULT_NS: [usize; 5] = [6, 8, 10, 12, 14];

/// All pairs of `coords`, first coordinate varying slowest.
pub fn source_grid(coords: &[f64]) -> Vec<Point2> {
    coords.iter().flat_map(|&a| coords.iter().map(move |&b| [a, b])).collect()
}

/// The smooth factor `f_s` (or `g_s` for the extraction pipelines).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntegrandKind {
    One,
    /// `t₁² + t₂²`.
    Quadratic,
    /// `exp(t₁ t₂)`.
    Exp,
    /// Surface Jacobian `J(t)`.
    Jacobian,
    /// `J(t) cos(k ‖X(t) − X(s)‖)`.
    HelmholtzJacobian { k: f64 },
}

impl IntegrandKind {
    pub fn parse(name: &str, k: Option<f64>) -> Result<Self> {
        Ok(match name {
            "one" => IntegrandKind::One,
            "quadratic" => IntegrandKind::Quadratic,
            "exp" => IntegrandKind::Exp,
            "jacobian" => IntegrandKind::Jacobian,
            "helmholtz" => IntegrandKind::HelmholtzJacobian { k: k.unwrap_or(FRAC_PI_2) },
            other => return Err(Error::Config(format!("field `integrand`: unknown integrand `{other}`"))),
        })
    }

    pub fn needs_surface(&self) -> bool {
        matches!(self, IntegrandKind::Jacobian | IntegrandKind::HelmholtzJacobian { .. })
    }
}

/// The matrix `A` of the direct pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricChoice {
    Identity,
    /// Entries `(e, f, g)` of `[[e, f], [f, g]]`.
    Constant([f64; 3]),
    /// First fundamental form of the surface at `s`.
    Surface,
}

/// How the physical or model integral is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// `∫ K B f` with the chosen `A`.
    Direct,
    /// `∫ G B g` as `∫ K B (ρ g)`.
    Multiplicative,
    /// `∫ G B g` as `∫ K B g + ∫ (G − K) B g`.
    Subtractive,
}

impl Pipeline {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "direct" => Ok(Pipeline::Direct),
            "multiplicative" => Ok(Pipeline::Multiplicative),
            "subtractive" => Ok(Pipeline::Subtractive),
            other => Err(Error::Config(format!("field `pipeline`: unknown pipeline `{other}`"))),
        }
    }
}

/// A surface name with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub name: String,
    pub params: Vec<f64>,
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<BuiltinSurface> {
        builtin_surface(&self.name, &self.params)
    }
}

/// Everything that determines the reference values: the integrand, the
/// kernel and the weight degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub integrand: IntegrandKind,
    pub metric: MetricChoice,
    pub surface: Option<SurfaceSpec>,
    pub pipeline: Pipeline,
}

impl Problem {
    /// `true` when the exact value is `∫ G B g` rather than `∫ K B f`.
    pub fn physical(&self) -> bool {
        self.pipeline != Pipeline::Direct
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub example: Option<u8>,
    pub d: usize,
    pub p: usize,
    pub ns: Vec<usize>,
    pub problem: Problem,
    pub sources: Vec<Point2>,
    pub qi_scheme: String,
    pub quad: SingularQuadConfig,
    pub oracle_target: f64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// One of the four built-in experiments, with `d = p = 2`.
    pub fn preset(example: u8) -> Result<Self> {
        let (integrand, metric, surface, pipeline, ns) = match example {
            1 => (IntegrandKind::Quadratic, MetricChoice::Identity, None, Pipeline::Direct, vec![6]),
            2 => (IntegrandKind::Exp, MetricChoice::Identity, None, Pipeline::Direct, DEFAULT_NS.to_vec()),
            3 => (
                IntegrandKind::Jacobian,
                MetricChoice::Surface,
                Some(SurfaceSpec { name: "cylinder".into(), params: vec![2.0] }),
                Pipeline::Multiplicative,
                DEFAULT_NS.to_vec(),
            ),
            4 => (
                IntegrandKind::HelmholtzJacobian { k: FRAC_PI_2 },
                MetricChoice::Surface,
                Some(SurfaceSpec { name: "hyperboloid".into(), params: vec![] }),
                Pipeline::Direct,
                DEFAULT_NS.to_vec(),
            ),
            other => return Err(Error::Config(format!("field `example`: expected 1..=4, got {other}"))),
        };
        Ok(ExperimentConfig {
            example: Some(example),
            d: 2,
            p: 2,
            ns,
            problem: Problem { integrand, metric, surface, pipeline },
            sources: source_grid(&SOURCE_COORDS),
            qi_scheme: "truncated-cardinal-inverse".into(),
            quad: SingularQuadConfig::default(),
            oracle_target: 1e-12,
            out: None,
        })
    }

    /// Preset 2 with the example tag removed, as a base for custom runs.
    pub fn custom() -> Self {
        let mut c = Self::preset(2).expect("preset 2 exists");
        c.example = None;
        c
    }

    /// Builds a config from an optional TOML manifest and command-line
    /// overrides; flags win over the file.
    pub fn resolve(file: Option<&str>, flags: &Overrides) -> Result<Self> {
        let file = match file {
            Some(text) => toml::from_str::<ConfigFile>(text).map_err(|e| Error::Config(e.to_string()))?,
            None => ConfigFile::default(),
        };
        let example = flags.example.or(file.experiment.example);
        let mut cfg = match example {
            Some(e) => Self::preset(e)?,
            None => Self::custom(),
        };
        cfg.apply(&file.experiment.into_overrides()?)?;
        if let Some(q) = file.quadrature {
            cfg.apply(&q.into_overrides())?;
        }
        cfg.apply(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = o.d {
            self.d = d;
        }
        if let Some(p) = o.p {
            self.p = p;
        }
        if let Some(ns) = &o.ns {
            self.ns = ns.clone();
        }
        if let Some(name) = &o.surface {
            let mut params = o.surface_params.clone().unwrap_or_default();
            if name == "cylinder" && params.is_empty() {
                params.push(2.0);
            }
            self.problem.surface = Some(SurfaceSpec { name: name.clone(), params });
        } else if let (Some(params), Some(s)) = (&o.surface_params, self.problem.surface.as_mut()) {
            s.params = params.clone();
        }
        if let Some(m) = o.metric {
            self.problem.metric = m;
        }
        if let Some(name) = &o.integrand {
            self.problem.integrand = IntegrandKind::parse(name, o.wave_number)?;
        } else if let (Some(k), IntegrandKind::HelmholtzJacobian { .. }) = (o.wave_number, self.problem.integrand) {
            self.problem.integrand = IntegrandKind::HelmholtzJacobian { k };
        }
        if let Some(name) = &o.pipeline {
            self.problem.pipeline = Pipeline::parse(name)?;
        }
        if let Some(coords) = &o.source_coords {
            self.sources = source_grid(coords);
        }
        if let Some(q) = &o.qi_scheme {
            self.qi_scheme = q.clone();
        }
        if let Some(g) = o.gauss_order {
            self.quad.gauss_order = g;
        }
        if let Some(g) = o.grading {
            self.quad.grading = g;
        }
        if let Some(t) = o.moment_tol {
            self.quad.target_accuracy = t;
        }
        if let Some(m) = o.max_depth {
            self.quad.max_depth = m;
        }
        if let Some(t) = o.oracle_tol {
            self.oracle_target = t;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.p == 0 {
            return Err(Error::Config(format!("fields `d`, `p`: must be ≥ 1, got d={} p={}", self.d, self.p)));
        }
        if self.ns.is_empty() {
            return Err(Error::Config("field `N`: empty list".into()));
        }
        if let Some(n) = self.ns.iter().find(|&&n| n < self.p + 2) {
            return Err(Error::Config(format!("field `N`: {n} < p + 2 = {}", self.p + 2)));
        }
        if self.ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("field `N`: values must increase".into()));
        }
        if self.sources.is_empty() {
            return Err(Error::Config("field `sources`: empty list".into()));
        }
        crate::quasi_interp::qi_scheme(&self.qi_scheme).map_err(|e| Error::Config(format!("field `qi`: {e}")))?;
        self.quad.validate().map_err(|e| Error::Config(format!("section `quadrature`: {e}")))?;
        if !(self.oracle_target >= 1e-14) {
            return Err(Error::Config(format!("field `oracle_tol`: {} < 1e-14", self.oracle_target)));
        }
        let p = &self.problem;
        let surface_needed = p.integrand.needs_surface() || p.physical() || p.metric == MetricChoice::Surface;
        match (&p.surface, surface_needed) {
            (None, true) => return Err(Error::Config("field `surface`: required by the integrand, metric or pipeline".into())),
            (Some(s), _) => {
                s.build().map_err(|e| Error::Config(format!("field `surface`: {e}")))?;
            }
            _ => {}
        }
        if let MetricChoice::Constant([e, f, g]) = p.metric {
            MetricMatrix::new(e, f, g).map_err(|e| Error::Config(format!("field `metric`: {e}")))?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form; any field change alters it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Identifier of the shipped reference set matching this problem.
    pub fn reference_id(&self) -> Option<u8> {
        (1..=4).find(|&e| {
            let preset = Self::preset(e).expect("presets 1..=4 exist");
            preset.problem == self.problem
                || (e == 3 && self.problem.pipeline == Pipeline::Subtractive && {
                    let mut p = self.problem.clone();
                    p.pipeline = Pipeline::Multiplicative;
                    p == preset.problem
                })
        })
    }
}

/// Optional values layered over a preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub example: Option<u8>,
    pub d: Option<usize>,
    pub p: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub surface: Option<String>,
    pub surface_params: Option<Vec<f64>>,
    pub metric: Option<MetricChoice>,
    pub integrand: Option<String>,
    pub wave_number: Option<f64>,
    pub pipeline: Option<String>,
    pub source_coords: Option<Vec<f64>>,
    pub qi_scheme: Option<String>,
    pub gauss_order: Option<usize>,
    pub grading: Option<f64>,
    pub moment_tol: Option<f64>,
    pub max_depth: Option<usize>,
    pub oracle_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    experiment: ExperimentSection,
    quadrature: Option<QuadratureSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    example: Option<u8>,
    d: Option<usize>,
    p: Option<usize>,
    #[serde(rename = "N")]
    ns: Option<Vec<usize>>,
    surface: Option<String>,
    surface_params: Option<Vec<f64>>,
    metric: Option<MetricField>,
    integrand: Option<String>,
    wave_number: Option<f64>,
    pipeline: Option<String>,
    sources: Option<Vec<f64>>,
    qi: Option<String>,
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MetricField {
    Name(String),
    Entries([f64; 3]),
}

impl ExperimentSection {
    fn into_overrides(self) -> Result<Overrides> {
        let metric = match self.metric {
            None => None,
            Some(MetricField::Entries(e)) => Some(MetricChoice::Constant(e)),
            Some(MetricField::Name(n)) => Some(parse_metric(&n)?),
        };
        Ok(Overrides {
            d: self.d,
            p: self.p,
            ns: self.ns,
            surface: self.surface,
            surface_params: self.surface_params,
            metric,
            integrand: self.integrand,
            wave_number: self.wave_number,
            pipeline: self.pipeline,
            source_coords: self.sources,
            qi_scheme: self.qi,
            out: self.out,
            ..Overrides::default()
        })
    }
}

/// `identity`, `surface`, or three comma-separated entries `e,f,g`.
pub fn parse_metric(text: &str) -> Result<MetricChoice> {
    match text {
        "identity" => Ok(MetricChoice::Identity),
        "surface" => Ok(MetricChoice::Surface),
        other => {
            let v: Vec<f64> = other
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("field `metric`: cannot parse `{other}`")))?;
            match v[..] {
                [e, f, g] => Ok(MetricChoice::Constant([e, f, g])),
                _ => Err(Error::Config(format!("field `metric`: expected 3 entries, got {}", v.len()))),
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureSection {
    gauss_order: Option<usize>,
    grading: Option<f64>,
    moment_tol: Option<f64>,
    max_depth: Option<usize>,
    oracle_tol: Option<f64>,
}

impl QuadratureSection {
    fn into_overrides(self) -> Overrides {
        Overrides {
            gauss_order: self.gauss_order,
            grading: self.grading,
            moment_tol: self.moment_tol,
            max_depth: self.max_depth,
            oracle_tol: self.oracle_tol,
            ..Overrides::default()
        }
    }
}
