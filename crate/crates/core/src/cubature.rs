//! The cubature rule `μ(s)ᵀ λ^Π` and the singularity extraction pipelines.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::bspline::BSplineWeight;
use crate::error::{Error, Result};
use crate::geometry::{first_fundamental_form, jacobian, kernel_g, rho_with_metric, MetricMatrix, Surface};
use crate::quadrature::{cut_lines, tensor_gauss, GaussRule};
use crate::quasi_interp::{apply_qi_tensor, QIOperator, QiScheme, SampleGrid2D, TruncatedCardinalInverse};
use crate::singular_kernel::{MomentEngine, MomentVector, SingularQuadConfig};
use crate::spline_product::{ProductCoefficients, ProductSpace, TensorMultiplier};
use crate::{Point2, Rect};

/// Smallest cell of the graded grid used for the subtractive remainder.
const REMAINDER_MIN_CELL: f64 = 1e-7;

/// `f_s`: a function of `t` bound to the source point `s`.
#[derive(Clone)]
pub struct IntegrandSampler {
    pub source: Point2,
    f: Arc<dyn Fn(Point2) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for IntegrandSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegrandSampler").field("source", &self.source).finish_non_exhaustive()
    }
}

impl IntegrandSampler {
    pub fn new(source: Point2, f: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        IntegrandSampler { source, f: Arc::new(f) }
    }

    pub fn eval(&self, t: Point2) -> f64 {
        (self.f)(t)
    }
}

type CacheKey = [u64; 5];

/// Quasi-interpolation on `N × N` breakpoints, multiplication by the
/// B-spline weight and modified moments, for one weight.
pub struct CubatureRule {
    weight: BSplineWeight,
    qi_u: QIOperator,
    qi_v: QIOperator,
    multiplier: TensorMultiplier,
    engine: MomentEngine,
    cache: Mutex<HashMap<CacheKey, Arc<MomentVector>>>,
}

impl std::fmt::Debug for CubatureRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CubatureRule")
            .field("weight", &self.weight)
            .field("p", &self.qi_u.basis().degree())
            .field("n", &self.qi_u.nodes().len())
            .finish_non_exhaustive()
    }
}

impl CubatureRule {
    /// Default quasi-interpolant of degree `p` on `n` uniform breakpoints per
    /// direction over the weight support.
    pub fn new(weight: BSplineWeight, p: usize, n: usize, cfg: SingularQuadConfig) -> Result<Self> {
        Self::with_scheme(weight, p, n, &TruncatedCardinalInverse, cfg)
    }

    /// As [`CubatureRule::new`] with an explicit quasi-interpolation scheme.
    pub fn with_scheme(
        weight: BSplineWeight,
        p: usize,
        n: usize,
        scheme: &dyn QiScheme,
        cfg: SingularQuadConfig,
    ) -> Result<Self> {
        let supp = weight.support();
        let uniform = |[a, b]: [f64; 2]| -> Vec<f64> {
            (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
        };
        if n < 2 {
            return Err(Error::InvalidBreakpoints(format!("{n} breakpoints")));
        }
        let qi_u = QIOperator::with_scheme(p, &uniform(supp.u), scheme)?;
        let qi_v = QIOperator::with_scheme(p, &uniform(supp.v), scheme)?;
        Self::from_operators(weight, qi_u, qi_v, cfg)
    }

    pub fn from_operators(weight: BSplineWeight, qi_u: QIOperator, qi_v: QIOperator, cfg: SingularQuadConfig) -> Result<Self> {
        let multiplier = TensorMultiplier::new(qi_u.basis(), qi_v.basis(), &weight)?;
        let engine = MomentEngine::new(multiplier.space().clone(), cfg)?;
        Ok(CubatureRule { weight, qi_u, qi_v, multiplier, engine, cache: Mutex::new(HashMap::new()) })
    }

    pub fn weight(&self) -> &BSplineWeight {
        &self.weight
    }

    pub fn qi(&self, dir: usize) -> &QIOperator {
        if dir == 0 {
            &self.qi_u
        } else {
            &self.qi_v
        }
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        self.multiplier.space()
    }

    pub fn config(&self) -> &SingularQuadConfig {
        self.engine.config()
    }

    /// `μ(s)`, memoized per `(s, A)`.
    pub fn moments(&self, a: &MetricMatrix, s: Point2) -> Result<Arc<MomentVector>> {
        let [e, f, g] = a.entries();
        let key = [s[0].to_bits(), s[1].to_bits(), e.to_bits(), f.to_bits(), g.to_bits()];
        if let Some(m) = self.cache.lock().expect("moment cache poisoned").get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(self.engine.moments(a, s)?);
        let mut cache = self.cache.lock().expect("moment cache poisoned");
        Ok(cache.entry(key).or_insert(m).clone())
    }

    pub fn cached_moments(&self) -> usize {
        self.cache.lock().expect("moment cache poisoned").len()
    }

    /// `λ^Π` for the quasi-interpolant of `f` times the weight.
    pub fn product_coefficients(&self, f: impl Fn(Point2) -> f64) -> Result<ProductCoefficients> {
        let grid = SampleGrid2D::sample(&self.qi_u, &self.qi_v, f);
        if let Some(i) = grid.values.iter().position(|v| !v.is_finite()) {
            let kv = grid.nodes_v.len();
            return Err(Error::NonFinite(grid.nodes_u[i / kv], grid.nodes_v[i % kv]));
        }
        let sigma = apply_qi_tensor(&self.qi_u, &self.qi_v, &grid)?;
        self.multiplier.multiply(&sigma)
    }

    /// `∫ K(s,t) B(t) f_s(t) dt ≈ μ(s)ᵀ λ^Π`.
    pub fn integrate_weakly_singular(&self, f: &IntegrandSampler, a: &MetricMatrix, s: Point2) -> Result<f64> {
        check_source(f, s)?;
        self.integrate_fn(|t| f.eval(t), a, s)
    }

    fn integrate_fn(&self, f: impl Fn(Point2) -> f64, a: &MetricMatrix, s: Point2) -> Result<f64> {
        let mu = self.moments(a, s)?;
        let lam = self.product_coefficients(f)?;
        Ok(mu.values.iter().zip(&lam.lambda_pi).map(|(m, l)| m * l).sum())
    }

    /// `∫ G(s,t) B(t) g_s(t) dt` as `∫ K B (ρ_s g_s)` with `A = A(s)`.
    pub fn integrate_multiplicative(&self, surface: &dyn Surface, g: &IntegrandSampler, s: Point2) -> Result<f64> {
        check_source(g, s)?;
        let a = first_fundamental_form(surface, s)?;
        self.integrate_fn(|t| rho_with_metric(surface, &a, s, t) * g.eval(t), &a, s)
    }

    /// `∫ G B g` as `∫ K B g` by the rule plus the regular `∫ (G − K) B g`.
    pub fn integrate_subtractive(&self, surface: &dyn Surface, g: &IntegrandSampler, s: Point2) -> Result<f64> {
        check_source(g, s)?;
        let a = first_fundamental_form(surface, s)?;
        let singular = self.integrate_weakly_singular(g, &a, s)?;
        Ok(singular + self.subtractive_remainder(surface, g, s)?)
    }

    /// `∫_{R_I} (G − K)(s,t) B(t) g_s(t) dt` on a grid graded toward `s`.
    pub fn subtractive_remainder(&self, surface: &dyn Surface, g: &IntegrandSampler, s: Point2) -> Result<f64> {
        let a = first_fundamental_form(surface, s)?;
        let supp = self.weight.support();
        let cells = graded_cells(&supp, self.weight.knots_u(), self.weight.knots_v(), s, REMAINDER_MIN_CELL);
        let integrand = |t: Point2| {
            let d = [t[0] - s[0], t[1] - s[1]];
            let q = a.form(d);
            if q == 0.0 {
                return 0.0;
            }
            let gk = kernel_g(surface, s, t).unwrap_or(f64::NAN) - 1.0 / q.sqrt();
            gk * self.weight.eval(t) * g.eval(t)
        };
        regular_integral(&integrand, &cells, self.config().gauss_order)
    }
}

fn check_source(f: &IntegrandSampler, s: Point2) -> Result<()> {
    if f.source != s {
        return Err(Error::InvalidArgument(format!(
            "integrand is bound to {:?}, not {s:?}",
            f.source
        )));
    }
    Ok(())
}

/// `Σ_cells` tensor Gauss of order `gauss_order`.
pub fn regular_integral<F: Fn(Point2) -> f64>(integrand: &F, cells: &[Rect], gauss_order: usize) -> Result<f64> {
    if gauss_order == 0 {
        return Err(Error::InvalidArgument("gauss_order must be positive".into()));
    }
    let rule = GaussRule::new(gauss_order);
    cells.iter().map(|c| tensor_gauss(integrand, c, &rule)).sum()
}

/// Cells of `domain` cut at `breaks` and through `focus`, with the cells
/// touching the point of the domain nearest `focus` split 2×2 repeatedly
/// down to size `min_size`.
pub fn graded_cells(domain: &Rect, breaks_u: &[f64], breaks_v: &[f64], focus: Point2, min_size: f64) -> Vec<Rect> {
    let p = domain.nearest_point(focus);
    let cu = cut_lines(domain.u[0], domain.u[1], breaks_u.iter().copied().chain([p[0]]));
    let cv = cut_lines(domain.v[0], domain.v[1], breaks_v.iter().copied().chain([p[1]]));
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for wu in cu.windows(2) {
        for wv in cv.windows(2) {
            stack.push(Rect::new(wu[0], wu[1], wv[0], wv[1]));
        }
    }
    while let Some(r) = stack.pop() {
        let touches = r.contains(p, 1e-14 * r.diameter());
        if !touches || r.width().max(r.height()) <= min_size {
            out.push(r);
            continue;
        }
        let [cx, cy] = r.center();
        stack.push(Rect::new(r.u[0], cx, r.v[0], cy));
        stack.push(Rect::new(cx, r.u[1], r.v[0], cy));
        stack.push(Rect::new(r.u[0], cx, cy, r.v[1]));
        stack.push(Rect::new(cx, r.u[1], cy, r.v[1]));
    }
    out
}

/// `o_k = ln(e_{k−1}/e_k) / ln(N_k/N_{k−1})`; the first entry is `None`.
pub fn convergence_order(errors: &[f64], ns: &[usize]) -> Result<Vec<Option<f64>>> {
    if errors.len() != ns.len() {
        return Err(Error::LengthMismatch { expected: ns.len(), found: errors.len() });
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidErrors(format!("error {e} is not positive")));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidErrors("N values must increase".into()));
    }
    let mut out = vec![None];
    for k in 1..errors.len() {
        out.push(Some((errors[k - 1] / errors[k]).ln() / (ns[k] as f64 / ns[k - 1] as f64).ln()));
    }
    out.truncate(errors.len());
    Ok(out)
}

/// Surface Jacobian as an integrand bound to `s`.
pub fn jacobian_sampler(surface: Arc<dyn Surface>, s: Point2) -> IntegrandSampler {
    IntegrandSampler::new(s, move |t| jacobian(surface.as_ref(), t).unwrap_or(f64::NAN))
}
