//! Modified moments `μ_i(s) = ∫ K(s,t) B^Π_i(t) dt` of the metric kernel.
//!
//! Each moment is assembled cell by cell from the Bernstein pieces of the
//! product-space basis. Per cell the kernel is integrated against every
//! product of Bernstein polynomials once, so the quadrature is shared by all
//! basis functions touching the cell.
//!
//! * Cells whose closure contains `s` are fanned into triangles with apex
//!   `s`. On each triangle the substitution `t = s + u (a + w (b − a) − s)`
//!   turns `K dt` into `|det| / sqrt(dᵀ A d) du dw`, which is smooth as long
//!   as the opposite edge is not long compared to its distance from `s`;
//!   longer edges are split.
//! * Other cells are subdivided toward the point nearest `s` until every
//!   piece is well separated from `s`, then integrated by tensor Gauss.

use std::sync::Arc;

use crate::bspline::bezier::bernstein_basis_into;
use crate::bspline::{KnotVector, Spline1D};
use crate::error::{Error, Result};
use crate::geometry::MetricMatrix;
use crate::quadrature::GaussRule;
use crate::spline_product::ProductSpace;
use crate::{Point2, Rect};

/// Pieces are integrated directly once `dist(s, piece) ≥ η · diam(piece)`.
const ADMISSIBLE_RATIO: f64 = 0.5;
/// Fan edges are split until `|b − a| ≤ κ · dist(s, [a, b])` in the metric of `A`.
const EDGE_RATIO: f64 = 1.0;

/// Quadrature parameters of the moment computation.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SingularQuadConfig {
    /// Gauss points per direction on every sub-cell or triangle.
    pub gauss_order: usize,
    /// Smallest relative cut offset of the graded subdivision.
    pub grading: f64,
    /// Maximum number of nested subdivisions.
    pub max_depth: usize,
    /// Requested relative accuracy of each moment.
    pub target_accuracy: f64,
}

impl Default for SingularQuadConfig {
    fn default() -> Self {
        SingularQuadConfig { gauss_order: 16, grading: 0.15, max_depth: 60, target_accuracy: 1e-12 }
    }
}

impl SingularQuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gauss_order < 2 {
            return Err(Error::InvalidArgument(format!("gauss_order {} < 2", self.gauss_order)));
        }
        if !(self.target_accuracy > 0.0) {
            return Err(Error::InvalidArgument("target_accuracy must be positive".into()));
        }
        if !(self.grading > 0.0 && self.grading < 0.5) {
            return Err(Error::InvalidArgument(format!("grading {} outside (0, 0.5)", self.grading)));
        }
        Ok(())
    }
}

/// `μ(s)` in lexicographic order of the product space.
#[derive(Clone, Debug)]
pub struct MomentVector {
    pub source: Point2,
    pub space: Arc<ProductSpace>,
    pub values: Vec<f64>,
    /// Largest relative change of a moment when the cells near `s` are
    /// recomputed with eight more Gauss points per direction.
    pub accuracy_estimate: f64,
}

/// A polynomial of bi-degree `degree` in Bernstein form on `cell`;
/// `coeffs[a * (degree[1] + 1) + b]` multiplies `b_a(u) b_b(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinPatch {
    pub cell: Rect,
    pub degree: [usize; 2],
    pub coeffs: Vec<f64>,
}

impl BernsteinPatch {
    pub fn new(cell: Rect, degree: [usize; 2], coeffs: Vec<f64>) -> Result<Self> {
        let n = (degree[0] + 1) * (degree[1] + 1);
        if coeffs.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: coeffs.len() });
        }
        Ok(BernsteinPatch { cell, degree, coeffs })
    }

    pub fn eval(&self, t: Point2) -> f64 {
        let [p, q] = self.degree;
        let mut bu = vec![0.0; p + 1];
        let mut bv = vec![0.0; q + 1];
        bernstein_basis_into(p, (t[0] - self.cell.u[0]) / self.cell.width(), &mut bu);
        bernstein_basis_into(q, (t[1] - self.cell.v[0]) / self.cell.height(), &mut bv);
        let mut acc = 0.0;
        for (a, x) in bu.iter().enumerate() {
            for (b, y) in bv.iter().enumerate() {
                acc += self.coeffs[a * (q + 1) + b] * x * y;
            }
        }
        acc
    }
}

/// How a cell was integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// Plain tensor Gauss.
    Admissible,
    /// Graded subdivision toward `s`.
    Refined,
    /// Fan triangulation from `s`.
    Singular,
}

struct Scratch {
    bu: Vec<f64>,
    bv: Vec<f64>,
    bv_rows: Vec<f64>,
}

/// Integrates `K(s, ·) b_a b_b` over a cell for one `(A, s)`.
struct CellIntegrator<'a> {
    a: MetricMatrix,
    s: Point2,
    cond: f64,
    deg: [usize; 2],
    cfg: &'a SingularQuadConfig,
}

impl<'a> CellIntegrator<'a> {
    fn new(a: MetricMatrix, s: Point2, deg: [usize; 2], cfg: &'a SingularQuadConfig) -> Self {
        let (lo, hi) = a.eigenvalues();
        CellIntegrator { a, s, cond: (hi / lo).sqrt(), deg, cfg }
    }

    fn scratch(&self, rule: &GaussRule) -> Scratch {
        Scratch {
            bu: vec![0.0; self.deg[0] + 1],
            bv: vec![0.0; self.deg[1] + 1],
            bv_rows: vec![0.0; rule.len() * (self.deg[1] + 1)],
        }
    }

    /// Adds `∫_cell K b_a b_b` to `m`.
    fn integrate(&self, cell: &Rect, rule: &GaussRule, m: &mut [f64], sc: &mut Scratch) -> Result<CellKind> {
        let tol = 1e-12 * cell.diameter();
        if cell.contains(self.s, tol) {
            self.fan(cell, rule, m, sc)?;
            return Ok(CellKind::Singular);
        }
        let mut kind = CellKind::Admissible;
        let mut stack = vec![(*cell, 0usize)];
        while let Some((r, depth)) = stack.pop() {
            let dist = r.distance(self.s);
            if dist >= ADMISSIBLE_RATIO * self.cond * r.diameter() || depth >= self.cfg.max_depth {
                self.tensor(cell, &r, rule, m, sc)?;
                continue;
            }
            kind = CellKind::Refined;
            let near = r.nearest_point(self.s);
            let cu = graded_cuts(r.u, near[0], dist, self.cfg.grading);
            let cv = graded_cuts(r.v, near[1], dist, self.cfg.grading);
            for wu in cu.windows(2) {
                for wv in cv.windows(2) {
                    stack.push((Rect::new(wu[0], wu[1], wv[0], wv[1]), depth + 1));
                }
            }
        }
        Ok(kind)
    }

    fn tensor(&self, cell: &Rect, r: &Rect, rule: &GaussRule, m: &mut [f64], sc: &mut Scratch) -> Result<()> {
        let [p, q] = self.deg;
        let nb = q + 1;
        let ys: Vec<(f64, f64)> = rule.mapped(r.v[0], r.v[1]).collect();
        for (j, &(y, _)) in ys.iter().enumerate() {
            bernstein_basis_into(q, (y - cell.v[0]) / cell.height(), &mut sc.bv_rows[j * nb..(j + 1) * nb]);
        }
        for (x, wx) in rule.mapped(r.u[0], r.u[1]) {
            bernstein_basis_into(p, (x - cell.u[0]) / cell.width(), &mut sc.bu);
            // Σ_j w_j K(x, y_j) b(y_j), then the outer product with b(x).
            sc.bv.iter_mut().for_each(|v| *v = 0.0);
            for (j, &(y, wy)) in ys.iter().enumerate() {
                let k = wx * wy / self.a.form([x - self.s[0], y - self.s[1]]).sqrt();
                if !k.is_finite() {
                    return Err(Error::NonFinite(x, y));
                }
                for (acc, b) in sc.bv.iter_mut().zip(&sc.bv_rows[j * nb..(j + 1) * nb]) {
                    *acc += k * b;
                }
            }
            for (a, bu) in sc.bu.iter().enumerate() {
                for (dst, bv) in m[a * nb..(a + 1) * nb].iter_mut().zip(&sc.bv) {
                    *dst += bu * bv;
                }
            }
        }
        Ok(())
    }

    fn fan(&self, cell: &Rect, rule: &GaussRule, m: &mut [f64], sc: &mut Scratch) -> Result<()> {
        let apex = cell.nearest_point(self.s);
        let c = cell.corners();
        let area_tol = 1e-14 * cell.area();
        for e in 0..4 {
            let (p0, p1) = (c[e], c[(e + 1) % 4]);
            if cross(sub(p0, apex), sub(p1, p0)).abs() <= area_tol {
                continue;
            }
            let mut segs = vec![(p0, p1, 0usize)];
            while let Some((a, b, depth)) = segs.pop() {
                let ab = sub(b, a);
                let len2 = self.a.form(ab);
                let lam = -dot_a(&self.a, sub(a, apex), ab) / len2;
                let foot = lam.clamp(0.0, 1.0);
                let rho2 = self.a.form(sub(lerp(a, b, foot), apex));
                if len2 <= EDGE_RATIO * EDGE_RATIO * rho2 * (1.0 + 1e-9) || depth >= self.cfg.max_depth {
                    self.duffy(cell, apex, a, b, rule, m, sc)?;
                    continue;
                }
                let split = if lam > 1e-3 && lam < 1.0 - 1e-3 {
                    lam
                } else {
                    let off = (EDGE_RATIO * (rho2 / len2).sqrt()).min(0.5);
                    if lam <= 0.5 {
                        off
                    } else {
                        1.0 - off
                    }
                };
                let mid = lerp(a, b, split);
                segs.push((a, mid, depth + 1));
                segs.push((mid, b, depth + 1));
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn duffy(
        &self,
        cell: &Rect,
        apex: Point2,
        a: Point2,
        b: Point2,
        rule: &GaussRule,
        m: &mut [f64],
        sc: &mut Scratch,
    ) -> Result<()> {
        let [p, q] = self.deg;
        let nb = q + 1;
        let ab = sub(b, a);
        let det = cross(sub(a, apex), ab).abs();
        for (w, ww) in rule.mapped(0.0, 1.0) {
            let d = sub(lerp(a, b, w), apex);
            let radial = ww * det / self.a.form(d).sqrt();
            for (u, wu) in rule.mapped(0.0, 1.0) {
                let t = [apex[0] + u * d[0], apex[1] + u * d[1]];
                let k = wu * radial;
                if !k.is_finite() {
                    return Err(Error::NonFinite(t[0], t[1]));
                }
                bernstein_basis_into(p, (t[0] - cell.u[0]) / cell.width(), &mut sc.bu);
                bernstein_basis_into(q, (t[1] - cell.v[0]) / cell.height(), &mut sc.bv);
                for (ia, bu) in sc.bu.iter().enumerate() {
                    let kb = k * bu;
                    for (dst, bv) in m[ia * nb..(ia + 1) * nb].iter_mut().zip(&sc.bv) {
                        *dst += kb * bv;
                    }
                }
            }
        }
        Ok(())
    }
}

fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn lerp(a: Point2, b: Point2, w: f64) -> Point2 {
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

fn dot_a(a: &MetricMatrix, x: Point2, y: Point2) -> f64 {
    let [e, f, g] = a.entries();
    e * x[0] * y[0] + f * (x[0] * y[1] + x[1] * y[0]) + g * x[1] * y[1]
}

/// Cut points of `[lo, hi]` (end points included) for a piece whose point
/// nearest the source has coordinate `x`.
fn graded_cuts([lo, hi]: [f64; 2], x: f64, dist: f64, grading: f64) -> Vec<f64> {
    let w = hi - lo;
    let tol = 1e-12 * w;
    if x > lo + tol && x < hi - tol {
        return vec![lo, x, hi];
    }
    let off = dist.clamp(grading * w, 0.5 * w);
    if x <= lo + tol {
        vec![lo, lo + off, hi]
    } else {
        vec![lo, hi - off, hi]
    }
}

/// `∫_cell K(s,t) b_a(u) b_b(v) dt` for all Bernstein pairs of bi-degree
/// `degree`, with the kind of treatment the cell received.
pub fn cell_moment_matrix(
    cell: &Rect,
    degree: [usize; 2],
    a: &MetricMatrix,
    s: Point2,
    cfg: &SingularQuadConfig,
) -> Result<(Vec<f64>, CellKind)> {
    cfg.validate()?;
    let rule = GaussRule::new(cfg.gauss_order);
    let ci = CellIntegrator::new(*a, s, degree, cfg);
    let mut sc = ci.scratch(&rule);
    let mut m = vec![0.0; (degree[0] + 1) * (degree[1] + 1)];
    let kind = ci.integrate(cell, &rule, &mut m, &mut sc)?;
    Ok((m, kind))
}

fn patch_integral(patch: &BernsteinPatch, a: &MetricMatrix, s: Point2, cfg: &SingularQuadConfig) -> Result<f64> {
    let (m, _) = cell_moment_matrix(&patch.cell, patch.degree, a, s, cfg)?;
    Ok(m.iter().zip(&patch.coeffs).map(|(x, c)| x * c).sum())
}

/// `∫_cell K(s,t) P(t) dt` for `s` in the closed cell.
pub fn singular_cell_integral(
    patch: &BernsteinPatch,
    a: &MetricMatrix,
    s: Point2,
    cfg: &SingularQuadConfig,
) -> Result<f64> {
    if !patch.cell.contains(s, 1e-12 * patch.cell.diameter()) {
        return Err(Error::InvalidArgument(format!("source {s:?} is not in the cell")));
    }
    patch_integral(patch, a, s, cfg)
}

/// `∫_cell K(s,t) P(t) dt` for `s` outside the cell.
pub fn nearly_singular_cell_integral(
    patch: &BernsteinPatch,
    a: &MetricMatrix,
    s: Point2,
    cfg: &SingularQuadConfig,
) -> Result<f64> {
    if patch.cell.contains(s, 1e-12 * patch.cell.diameter()) {
        return Err(Error::InvalidArgument(format!("source {s:?} lies in the cell")));
    }
    patch_integral(patch, a, s, cfg)
}

/// Bernstein coefficients of every basis function on every span.
#[derive(Clone, Debug)]
struct Extraction {
    /// `(first basis index, [a, b], rows)` with `rows[r][k]` the `k`-th
    /// Bernstein coefficient of basis function `first + r`.
    spans: Vec<(usize, [f64; 2], Vec<Vec<f64>>)>,
}

impl Extraction {
    fn new(kv: &KnotVector) -> Result<Self> {
        let p = kv.degree();
        let mut spans = Vec::new();
        for (k, a, b) in kv.spans() {
            let first = k - p;
            let mut rows = Vec::with_capacity(p + 1);
            for i in first..=k {
                let mut unit = vec![0.0; kv.dim()];
                unit[i] = 1.0;
                rows.push(Spline1D::new(kv.clone(), unit)?.bezier_on(a, b)?.coeffs);
            }
            spans.push((first, [a, b], rows));
        }
        Ok(Extraction { spans })
    }
}

/// Reusable moment computation for one product space.
#[derive(Clone, Debug)]
pub struct MomentEngine {
    space: Arc<ProductSpace>,
    cfg: SingularQuadConfig,
    ext_u: Extraction,
    ext_v: Extraction,
    rule: GaussRule,
    check_rule: GaussRule,
}

impl MomentEngine {
    pub fn new(space: Arc<ProductSpace>, cfg: SingularQuadConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(MomentEngine {
            ext_u: Extraction::new(space.knots_u())?,
            ext_v: Extraction::new(space.knots_v())?,
            rule: GaussRule::new(cfg.gauss_order),
            check_rule: GaussRule::new(cfg.gauss_order + 8),
            space,
            cfg,
        })
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn config(&self) -> &SingularQuadConfig {
        &self.cfg
    }

    /// Largest accepted distance between `s` and the support.
    pub fn source_limit(&self) -> f64 {
        0.5 * self.space.element_scale()
    }

    pub fn moments(&self, a: &MetricMatrix, s: Point2) -> Result<MomentVector> {
        let support = self.space.support();
        let distance = support.distance(s);
        let limit = self.source_limit();
        if distance > limit * (1.0 + 1e-12) {
            return Err(Error::SourceTooFar { s0: s[0], s1: s[1], distance, limit });
        }
        let [p, q] = self.space.degree();
        let ci = CellIntegrator::new(*a, s, [p, q], &self.cfg);
        let mut sc = ci.scratch(&self.check_rule);
        let n = self.space.dim();
        let mut values = vec![0.0; n];
        let mut refined = vec![0.0; n];
        let mut m = vec![0.0; (p + 1) * (q + 1)];
        let mut tmp = vec![0.0; (p + 1) * (q + 1)];
        for (fu, ru, eu) in &self.ext_u.spans {
            for (fv, rv, ev) in &self.ext_v.spans {
                let cell = Rect::new(ru[0], ru[1], rv[0], rv[1]);
                m.iter_mut().for_each(|x| *x = 0.0);
                let kind = ci.integrate(&cell, &self.rule, &mut m, &mut sc)?;
                self.scatter(*fu, eu, *fv, ev, &m, &mut tmp, &mut values);
                if kind != CellKind::Admissible {
                    m.iter_mut().for_each(|x| *x = 0.0);
                    ci.integrate(&cell, &self.check_rule, &mut m, &mut sc)?;
                }
                self.scatter(*fu, eu, *fv, ev, &m, &mut tmp, &mut refined);
            }
        }
        let accuracy_estimate = values
            .iter()
            .zip(&refined)
            .map(|(a, b)| (a - b).abs() / b.abs())
            .fold(0.0, f64::max);
        Ok(MomentVector { source: s, space: self.space.clone(), values, accuracy_estimate })
    }

    /// `μ_{ij} += Σ_ab E_u[i][a] M[a][b] E_v[j][b]`.
    #[allow(clippy::too_many_arguments)]
    fn scatter(
        &self,
        fu: usize,
        eu: &[Vec<f64>],
        fv: usize,
        ev: &[Vec<f64>],
        m: &[f64],
        tmp: &mut [f64],
        out: &mut [f64],
    ) {
        let nb = ev.len();
        let nv = self.space.dims()[1];
        for (r, erow) in eu.iter().enumerate() {
            for b in 0..nb {
                tmp[r * nb + b] = erow.iter().enumerate().map(|(a, e)| e * m[a * nb + b]).sum();
            }
        }
        for r in 0..eu.len() {
            for (c, erow) in ev.iter().enumerate() {
                let v: f64 = erow.iter().zip(&tmp[r * nb..(r + 1) * nb]).map(|(e, t)| e * t).sum();
                out[(fu + r) * nv + fv + c] += v;
            }
        }
    }
}

/// `μ(s)` for every basis function of `space`.
pub fn modified_moments(
    space: &Arc<ProductSpace>,
    a: &MetricMatrix,
    s: Point2,
    cfg: &SingularQuadConfig,
) -> Result<MomentVector> {
    MomentEngine::new(space.clone(), cfg.clone())?.moments(a, s)
}
