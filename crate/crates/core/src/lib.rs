//! Cubature rules for weakly singular and nearly singular double integrals
//!
//! ```text
//!     ∫_R K(s,t) B(t) f_s(t) dt,     K(s,t) = 1 / sqrt((t-s)ᵀ A (t-s))
//! ```
//!
//! where `B` is a tensor-product B-spline supported on the rectangle `R`.
//! The smooth factor `f_s` is replaced by a tensor-product spline
//! quasi-interpolant, the quasi-interpolant is multiplied exactly by `B`, and
//! the resulting spline is integrated against the kernel through its modified
//! moments `μ_i(s) = ∫ K(s,t) B^Π_i(t) dt`.
//!
//! Module map:
//!
//! - [`bspline`]: knot vectors, univariate and tensor splines, Bézier extraction.
//! - [`quasi_interp`]: banded derivative-free quasi-interpolation operators.
//! - [`spline_product`]: exact products of splines in a merged product space.
//! - [`geometry`]: surfaces, first fundamental form and the kernels.
//! - [`singular_kernel`]: modified moments for singular and nearly singular sources.
//! - [`cubature`]: the composed rules and the singularity extraction pipelines.
//! - [`oracle`]: an independent adaptive reference integrator.
//! - [`experiment`]: experiment configs, error tables and golden files.

pub mod bspline;
pub mod cubature;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod oracle;
pub mod quadrature;
pub mod quasi_interp;
pub mod singular_kernel;
pub mod spline_product;

pub use bspline::{BSplineWeight, BezierSegment, KnotVector, Spline1D, TensorSpline2D};
pub use cubature::{convergence_order, CubatureRule, IntegrandSampler};
pub use error::{Error, Result};
pub use geometry::{MetricMatrix, Surface};
pub use quasi_interp::{QIOperator, SampleGrid2D};
pub use singular_kernel::{modified_moments, MomentVector, SingularQuadConfig};
pub use spline_product::{ProductCoefficients, ProductSpace};

/// A point of the parameter plane.
pub type Point2 = [f64; 2];

/// Axis-aligned closed rectangle `[u0, u1] × [v0, v1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Rect {
    pub const fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Self {
        Rect { u: [u0, u1], v: [v0, v1] }
    }

    /// The reference square `[-1, 1]²`.
    pub const fn reference() -> Self {
        Rect::new(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn height(&self) -> f64 {
        self.v[1] - self.v[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point2 {
        [0.5 * (self.u[0] + self.u[1]), 0.5 * (self.v[0] + self.v[1])]
    }

    /// Closest point of the rectangle to `p`.
    pub fn nearest_point(&self, p: Point2) -> Point2 {
        [p[0].clamp(self.u[0], self.u[1]), p[1].clamp(self.v[0], self.v[1])]
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance(&self, p: Point2) -> f64 {
        let q = self.nearest_point(p);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    /// Closed-set membership with an absolute tolerance.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p[0] >= self.u[0] - tol
            && p[0] <= self.u[1] + tol
            && p[1] >= self.v[0] - tol
            && p[1] <= self.v[1] + tol
    }

    /// Corners in counter-clockwise order starting at `(u0, v0)`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            [self.u[0], self.v[0]],
            [self.u[1], self.v[0]],
            [self.u[1], self.v[1]],
            [self.u[0], self.v[1]],
        ]
    }
}
