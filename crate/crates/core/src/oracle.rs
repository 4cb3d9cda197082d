//! Adaptive reference integration, independent of the cubature code.
//!
//! Rules come from the Golub–Welsch eigenvalue problem, cells holding the
//! declared singular point get their own fan/Duffy treatment, and every cell
//! is evaluated with two orders whose difference drives a global adaptive
//! loop.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{MetricMatrix, Surface};
use crate::{Point2, Rect};

/// Kernel multiplying the integrand.
#[derive(Clone)]
pub enum OracleKernel {
    None,
    /// `1 / sqrt((t − s)ᵀ A (t − s))`.
    Metric(MetricMatrix),
    /// `1 / ‖X(t) − X(s)‖`.
    Surface(Arc<dyn Surface>),
}

impl std::fmt::Debug for OracleKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleKernel::None => write!(f, "None"),
            OracleKernel::Metric(a) => write!(f, "Metric({:?})", a.entries()),
            OracleKernel::Surface(s) => write!(f, "Surface({})", s.name()),
        }
    }
}

impl OracleKernel {
    /// Kernel times the distance-like factor `u` of the Duffy map, evaluated
    /// at `t = s + u d`.
    fn radial(&self, s: Point2, d: Point2, u: f64) -> f64 {
        match self {
            OracleKernel::None => u,
            OracleKernel::Metric(a) => {
                let [e, f, g] = a.entries();
                1.0 / (e * d[0] * d[0] + 2.0 * f * d[0] * d[1] + g * d[1] * d[1]).sqrt()
            }
            OracleKernel::Surface(x) => {
                let p = x.point([s[0] + u * d[0], s[1] + u * d[1]]);
                let q = x.point(s);
                u / ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
            }
        }
    }

    fn direct(&self, s: Point2, t: Point2) -> f64 {
        match self {
            OracleKernel::None => 1.0,
            OracleKernel::Metric(a) => {
                let d = [t[0] - s[0], t[1] - s[1]];
                let [e, f, g] = a.entries();
                1.0 / (e * d[0] * d[0] + 2.0 * f * d[0] * d[1] + g * d[1] * d[1]).sqrt()
            }
            OracleKernel::Surface(x) => {
                let p = x.point(t);
                let q = x.point(s);
                1.0 / ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
            }
        }
    }
}

/// Vector-valued integrand: writes `dim` values at `t`.
pub type VectorIntegrand = Arc<dyn Fn(Point2, &mut [f64]) + Send + Sync>;

/// One (possibly vector-valued) integral `∫_domain kernel(s,t) f(t) dt`.
#[derive(Clone)]
pub struct OracleRequest {
    pub integrand: VectorIntegrand,
    pub dim: usize,
    pub kernel: OracleKernel,
    /// Point where the integrand may be singular or non-smooth.
    pub singular_point: Option<Point2>,
    pub domain: Rect,
    /// Lines across which the integrand is not smooth.
    pub breaks_u: Vec<f64>,
    pub breaks_v: Vec<f64>,
    pub target_accuracy: f64,
    pub max_depth: usize,
    /// Jitters every split point by up to ±10% of the cell size.
    pub split_seed: Option<u64>,
}

impl OracleRequest {
    pub fn scalar(f: impl Fn(Point2) -> f64 + Send + Sync + 'static, domain: Rect) -> Self {
        Self::vector(1, move |t, out: &mut [f64]| out[0] = f(t), domain)
    }

    pub fn vector(dim: usize, f: impl Fn(Point2, &mut [f64]) + Send + Sync + 'static, domain: Rect) -> Self {
        OracleRequest {
            integrand: Arc::new(f),
            dim,
            kernel: OracleKernel::None,
            singular_point: None,
            domain,
            breaks_u: Vec::new(),
            breaks_v: Vec::new(),
            target_accuracy: 1e-12,
            max_depth: 30,
            split_seed: None,
        }
    }

    pub fn with_kernel(mut self, kernel: OracleKernel, s: Point2) -> Self {
        self.kernel = kernel;
        self.singular_point = Some(s);
        self
    }

    pub fn with_singular_point(mut self, s: Point2) -> Self {
        self.singular_point = Some(s);
        self
    }

    pub fn with_breaks(mut self, u: Vec<f64>, v: Vec<f64>) -> Self {
        self.breaks_u = u;
        self.breaks_v = v;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_accuracy = target;
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split_seed = Some(seed);
        self
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    pub cells: usize,
}

impl OracleResult {
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimates[0]
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` from the Jacobi matrix.
fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).unzip()
}

struct Rules {
    low: (Vec<f64>, Vec<f64>),
    high: (Vec<f64>, Vec<f64>),
    duffy_low: (Vec<f64>, Vec<f64>),
    duffy_high: (Vec<f64>, Vec<f64>),
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        low: golub_welsch(10),
        high: golub_welsch(20),
        duffy_low: golub_welsch(20),
        duffy_high: golub_welsch(32),
    })
}

struct Cell {
    rect: Rect,
    depth: usize,
    values: Vec<f64>,
    errors: Vec<f64>,
    priority: f64,
    seq: u64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then(other.seq.cmp(&self.seq))
    }
}

struct Evaluator<'a> {
    req: &'a OracleRequest,
    buf: Vec<f64>,
}

impl Evaluator<'_> {
    fn tensor(&mut self, r: &Rect, rule: &(Vec<f64>, Vec<f64>), out: &mut [f64]) -> Result<()> {
        let (xs, ws) = rule;
        let (w, h) = (r.width(), r.height());
        for (xu, wu) in xs.iter().zip(ws) {
            let x = r.u[0] + w * xu;
            for (xv, wv) in xs.iter().zip(ws) {
                let t = [x, r.v[0] + h * xv];
                let k = match self.req.singular_point {
                    Some(s) => self.req.kernel.direct(s, t),
                    None => 1.0,
                } * wu * wv * w * h;
                self.sample(t, k, out)?;
            }
        }
        Ok(())
    }

    fn duffy(&mut self, r: &Rect, s: Point2, rule: &(Vec<f64>, Vec<f64>), out: &mut [f64]) -> Result<()> {
        let (xs, ws) = rule;
        let c = r.corners();
        for e in 0..4 {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let det = ((a[0] - s[0]) * ab[1] - (a[1] - s[1]) * ab[0]).abs();
            if det <= 1e-14 * r.area() {
                continue;
            }
            for (xw, ww) in xs.iter().zip(ws) {
                let d = [a[0] + xw * ab[0] - s[0], a[1] + xw * ab[1] - s[1]];
                for (xu, wu) in xs.iter().zip(ws) {
                    let t = [s[0] + xu * d[0], s[1] + xu * d[1]];
                    let k = self.req.kernel.radial(s, d, *xu) * det * ww * wu;
                    self.sample(t, k, out)?;
                }
            }
        }
        Ok(())
    }

    fn sample(&mut self, t: Point2, k: f64, out: &mut [f64]) -> Result<()> {
        (self.req.integrand)(t, &mut self.buf);
        for (o, v) in out.iter_mut().zip(&self.buf) {
            let x = k * v;
            if !x.is_finite() {
                return Err(Error::NonFinite(t[0], t[1]));
            }
            *o += x;
        }
        Ok(())
    }

    fn cell(&mut self, rect: Rect, depth: usize, seq: u64, scale: &[f64]) -> Result<Cell> {
        let n = self.req.dim;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        let rs = rules();
        let singular = self
            .req
            .singular_point
            .filter(|&s| rect.contains(s, 1e-13 * rect.diameter()));
        match singular {
            Some(s) => {
                let s = rect.nearest_point(s);
                self.duffy(&rect, s, &rs.duffy_low, &mut lo)?;
                self.duffy(&rect, s, &rs.duffy_high, &mut hi)?;
            }
            None => {
                self.tensor(&rect, &rs.low, &mut lo)?;
                self.tensor(&rect, &rs.high, &mut hi)?;
            }
        }
        let errors: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (a - b).abs()).collect();
        let priority = errors
            .iter()
            .zip(scale)
            .map(|(e, s)| if *s > 0.0 { e / s } else { *e })
            .fold(0.0, f64::max);
        Ok(Cell { rect, depth, values: hi, errors, priority, seq })
    }
}

fn grid_lines(lo: f64, hi: f64, breaks: &[f64], s: Option<f64>) -> Vec<f64> {
    let tol = 1e-13 * (hi - lo);
    let mut v: Vec<f64> = breaks.iter().copied().chain(s).filter(|&x| x > lo + tol && x < hi - tol).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
    v
}

/// Adaptive integration to `req.target_accuracy`, relative to `Σ |I_cell|`
/// separately for every component.
pub fn oracle_integrate(req: &OracleRequest) -> Result<OracleResult> {
    if !(req.target_accuracy >= 1e-14) {
        return Err(Error::InvalidArgument(format!(
            "oracle target accuracy {} is below 1e-14",
            req.target_accuracy
        )));
    }
    if req.dim == 0 {
        return Err(Error::InvalidArgument("integrand dimension is zero".into()));
    }
    if !matches!(req.kernel, OracleKernel::None) && req.singular_point.is_none() {
        return Err(Error::InvalidArgument("kernel without a source point".into()));
    }
    let dom = req.domain;
    let su = grid_lines(dom.u[0], dom.u[1], &req.breaks_u, req.singular_point.map(|s| s[0]));
    let sv = grid_lines(dom.v[0], dom.v[1], &req.breaks_v, req.singular_point.map(|s| s[1]));
    let mut ev = Evaluator { req, buf: vec![0.0; req.dim] };
    let mut rng = req.split_seed.map(ChaCha8Rng::seed_from_u64);
    let n = req.dim;

    let mut seq = 0u64;
    let ones = vec![0.0; n];
    let mut initial = Vec::new();
    for wu in su.windows(2) {
        for wv in sv.windows(2) {
            initial.push(ev.cell(Rect::new(wu[0], wu[1], wv[0], wv[1]), 0, seq, &ones)?);
            seq += 1;
        }
    }
    // scales fixed after the first pass so priorities stay comparable
    let mut scale = vec![0.0; n];
    for c in &initial {
        for (s, v) in scale.iter_mut().zip(&c.values) {
            *s += v.abs();
        }
    }
    let mut heap = BinaryHeap::new();
    for mut c in initial {
        c.priority = c.errors.iter().zip(&scale).map(|(e, s)| if *s > 0.0 { e / s } else { *e }).fold(0.0, f64::max);
        heap.push(c);
    }
    let totals = |heap: &BinaryHeap<Cell>| {
        let mut err = vec![0.0; n];
        let mut abs = vec![0.0; n];
        for c in heap.iter() {
            for k in 0..n {
                err[k] += c.errors[k];
                abs[k] += c.values[k].abs();
            }
        }
        (err, abs)
    };
    let converged = |err: &[f64], abs: &[f64]| err.iter().zip(abs).all(|(e, a)| *e <= req.target_accuracy * a);

    let (mut err, mut abs) = totals(&heap);
    while !converged(&err, &abs) {
        let worst = heap.pop().expect("at least one cell");
        if worst.depth >= req.max_depth {
            heap.push(worst);
            let (values, _) = finish(heap);
            let rel = |k: usize| err[k] / abs[k].max(f64::MIN_POSITIVE);
            let k = (0..n).max_by(|&a, &b| rel(a).total_cmp(&rel(b))).unwrap_or(0);
            return Err(Error::NonConvergence { value: values[k], estimate: err[k] });
        }
        for k in 0..n {
            err[k] -= worst.errors[k];
            abs[k] -= worst.values[k].abs();
        }
        let r = worst.rect;
        let mut jitter = || rng.as_mut().map_or(0.0, |g| g.gen_range(-0.1..0.1));
        let mu = r.u[0] + (0.5 + jitter()) * r.width();
        let mv = r.v[0] + (0.5 + jitter()) * r.height();
        for child in [
            Rect::new(r.u[0], mu, r.v[0], mv),
            Rect::new(mu, r.u[1], r.v[0], mv),
            Rect::new(r.u[0], mu, mv, r.v[1]),
            Rect::new(mu, r.u[1], mv, r.v[1]),
        ] {
            let c = ev.cell(child, worst.depth + 1, seq, &scale)?;
            seq += 1;
            for k in 0..n {
                err[k] += c.errors[k];
                abs[k] += c.values[k].abs();
            }
            heap.push(c);
        }
        // refresh the running sums now and then to avoid drift
        if seq.is_multiple_of(4096) {
            (err, abs) = totals(&heap);
        }
    }
    let cells = heap.len();
    let (values, error_estimates) = finish(heap);
    Ok(OracleResult { values, error_estimates, cells })
}

/// Sums cell values in a fixed (sequence) order.
fn finish(heap: BinaryHeap<Cell>) -> (Vec<f64>, Vec<f64>) {
    let mut cells = heap.into_vec();
    cells.sort_by_key(|c| c.seq);
    let n = cells.first().map_or(0, |c| c.values.len());
    let mut values = vec![0.0; n];
    let mut errors = vec![0.0; n];
    for c in &cells {
        for k in 0..n {
            values[k] += c.values[k];
            errors[k] += c.errors[k];
        }
    }
    (values, errors)
}
