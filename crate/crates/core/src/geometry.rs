//! Parametric surfaces and the kernels built from them.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::{Point2, Rect};

pub type Point3 = [f64; 3];

fn sub3(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: Point3) -> f64 {
    dot3(a, a).sqrt()
}

fn cross3(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Symmetric positive definite 2×2 matrix `[e f; f g]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricMatrix {
    e: f64,
    f: f64,
    g: f64,
}

impl MetricMatrix {
    pub fn new(e: f64, f: f64, g: f64) -> Result<Self> {
        let scale = e.abs().max(g.abs()).max(f.abs());
        let det = e * g - f * f;
        if !(e > 0.0 && g > 0.0 && det > 1e-14 * scale * scale) || !det.is_finite() {
            return Err(Error::NotPositiveDefinite { e, f, g });
        }
        Ok(MetricMatrix { e, f, g })
    }

    pub fn identity() -> Self {
        MetricMatrix { e: 1.0, f: 0.0, g: 1.0 }
    }

    pub fn entries(&self) -> [f64; 3] {
        [self.e, self.f, self.g]
    }

    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// Eigenvalues `(λ_min, λ_max)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.e + self.g);
        let r = (0.25 * (self.e - self.g).powi(2) + self.f * self.f).sqrt();
        (m - r, m + r)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.e, c * self.f, c * self.g)
    }

    /// `dᵀ A d`.
    #[inline]
    pub fn form(&self, d: Point2) -> f64 {
        self.e * d[0] * d[0] + 2.0 * self.f * d[0] * d[1] + self.g * d[1] * d[1]
    }
}

/// `P_s(t) = (t − s)ᵀ A (t − s)`.
pub fn quadratic_form(a: &MetricMatrix, s: Point2, t: Point2) -> f64 {
    a.form([t[0] - s[0], t[1] - s[1]])
}

/// `K(s, t) = 1 / sqrt(P_s(t))`.
pub fn kernel_k(a: &MetricMatrix, s: Point2, t: Point2) -> Result<f64> {
    if s == t {
        return Err(Error::SingularPoint(s[0], s[1]));
    }
    Ok(1.0 / quadratic_form(a, s, t).sqrt())
}

/// A parametric surface `X(t) ∈ ℝ³` over a parameter rectangle.
///
/// Implementations must be reentrant. The default partials are central
/// differences with step `1e-6` times the domain scale.
pub trait Surface: Send + Sync {
    fn name(&self) -> String;

    fn point(&self, t: Point2) -> Point3;

    fn domain(&self) -> Rect {
        Rect::reference()
    }

    fn partials(&self, t: Point2) -> [Point3; 2] {
        let h = 1e-6 * self.domain().diameter();
        let d = |k: usize| {
            let mut tp = t;
            let mut tm = t;
            tp[k] += h;
            tm[k] -= h;
            let (a, b) = (self.point(tp), self.point(tm));
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h), (a[2] - b[2]) / (2.0 * h)]
        };
        [d(0), d(1)]
    }
}

/// Surfaces with analytic derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinSurface {
    /// `X(t) = (t₁, t₂, 0)`.
    Plane,
    /// `X(t) = (r cos(πt₁/4), r sin(πt₁/4), t₂)`.
    Cylinder { radius: f64 },
    /// `X(t) = (cos(πt₁/4) √(1+t₂²), sin(πt₁/4) √(1+t₂²), t₂)`.
    Hyperboloid,
}

/// Looks up a built-in surface; `cylinder` takes an optional radius
/// (default 2).
pub fn builtin_surface(name: &str, params: &[f64]) -> Result<BuiltinSurface> {
    match (name.to_ascii_lowercase().as_str(), params) {
        ("plane", []) => Ok(BuiltinSurface::Plane),
        ("cylinder", []) => Ok(BuiltinSurface::Cylinder { radius: 2.0 }),
        ("cylinder", [r]) if *r > 0.0 => Ok(BuiltinSurface::Cylinder { radius: *r }),
        ("hyperboloid", []) => Ok(BuiltinSurface::Hyperboloid),
        ("plane" | "cylinder" | "hyperboloid", _) => Err(Error::InvalidArgument(format!(
            "bad parameters {params:?} for surface `{name}`"
        ))),
        _ => Err(Error::UnknownSurface(name.to_string())),
    }
}

impl Surface for BuiltinSurface {
    fn name(&self) -> String {
        match self {
            BuiltinSurface::Plane => "plane".into(),
            BuiltinSurface::Cylinder { radius } => format!("cylinder(r={radius})"),
            BuiltinSurface::Hyperboloid => "hyperboloid".into(),
        }
    }

    fn point(&self, t: Point2) -> Point3 {
        match *self {
            BuiltinSurface::Plane => [t[0], t[1], 0.0],
            BuiltinSurface::Cylinder { radius } => {
                let (s, c) = (FRAC_PI_4 * t[0]).sin_cos();
                [radius * c, radius * s, t[1]]
            }
            BuiltinSurface::Hyperboloid => {
                let (s, c) = (FRAC_PI_4 * t[0]).sin_cos();
                let w = (1.0 + t[1] * t[1]).sqrt();
                [c * w, s * w, t[1]]
            }
        }
    }

    fn partials(&self, t: Point2) -> [Point3; 2] {
        match *self {
            BuiltinSurface::Plane => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            BuiltinSurface::Cylinder { radius } => {
                let (s, c) = (FRAC_PI_4 * t[0]).sin_cos();
                let k = radius * FRAC_PI_4;
                [[-k * s, k * c, 0.0], [0.0, 0.0, 1.0]]
            }
            BuiltinSurface::Hyperboloid => {
                let (s, c) = (FRAC_PI_4 * t[0]).sin_cos();
                let w = (1.0 + t[1] * t[1]).sqrt();
                let dw = t[1] / w;
                [[-FRAC_PI_4 * s * w, FRAC_PI_4 * c * w, 0.0], [c * dw, s * dw, 1.0]]
            }
        }
    }
}

/// A user surface given by a closure; partials by central differences.
pub struct FnSurface<F> {
    name: String,
    domain: Rect,
    map: F,
}

impl<F: Fn(Point2) -> Point3 + Send + Sync> FnSurface<F> {
    pub fn new(name: impl Into<String>, domain: Rect, map: F) -> Self {
        FnSurface { name: name.into(), domain, map }
    }
}

impl<F: Fn(Point2) -> Point3 + Send + Sync> Surface for FnSurface<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn point(&self, t: Point2) -> Point3 {
        (self.map)(t)
    }

    fn domain(&self) -> Rect {
        self.domain
    }
}

/// Largest deviation between the surface partials and central differences
/// with step `h`.
pub fn partials_consistency(surface: &dyn Surface, t: Point2, h: f64) -> f64 {
    let d = surface.partials(t);
    (0..2)
        .map(|k| {
            let mut tp = t;
            let mut tm = t;
            tp[k] += h;
            tm[k] -= h;
            let fd = sub3(surface.point(tp), surface.point(tm));
            (0..3).map(|i| (fd[i] / (2.0 * h) - d[k][i]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `A(s)`: pairwise dot products of the surface partials at `s`.
pub fn first_fundamental_form(surface: &dyn Surface, s: Point2) -> Result<MetricMatrix> {
    let [xu, xv] = surface.partials(s);
    MetricMatrix::new(dot3(xu, xu), dot3(xu, xv), dot3(xv, xv))
        .map_err(|_| Error::DegenerateSurface(s[0], s[1]))
}

/// Single layer kernel `G(s, t) = 1 / ‖X(t) − X(s)‖`.
pub fn kernel_g(surface: &dyn Surface, s: Point2, t: Point2) -> Result<f64> {
    let r = norm3(sub3(surface.point(t), surface.point(s)));
    if r == 0.0 {
        return Err(Error::SingularPoint(s[0], s[1]));
    }
    Ok(1.0 / r)
}

/// `ρ_s(t) = sqrt(P_s(t)) / ‖X(t) − X(s)‖`, extended by 1 at `t = s`.
pub fn rho(surface: &dyn Surface, s: Point2, t: Point2) -> Result<f64> {
    let a = first_fundamental_form(surface, s)?;
    Ok(rho_with_metric(surface, &a, s, t))
}

/// `ρ_s` with a precomputed `A(s)`.
pub fn rho_with_metric(surface: &dyn Surface, a: &MetricMatrix, s: Point2, t: Point2) -> f64 {
    let d = [t[0] - s[0], t[1] - s[1]];
    if d[0].hypot(d[1]) < 1e-13 * surface.domain().diameter() {
        return 1.0;
    }
    let r = norm3(sub3(surface.point(t), surface.point(s)));
    a.form(d).sqrt() / r
}

/// `J(t) = ‖X_{t₁} × X_{t₂}‖`.
pub fn jacobian(surface: &dyn Surface, t: Point2) -> Result<f64> {
    let [xu, xv] = surface.partials(t);
    let j = norm3(cross3(xu, xv));
    let scale = norm3(xu) * norm3(xv);
    if !(j > 1e-12 * scale) {
        return Err(Error::DegenerateSurface(t[0], t[1]));
    }
    Ok(j)
}
