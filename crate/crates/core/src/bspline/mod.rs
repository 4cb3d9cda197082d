//! Univariate and tensor-product B-spline representations.
//!
//! Knot vectors follow the usual convention: a degree `p` knot vector
//! `ξ_0 ≤ … ≤ ξ_{m+p+1}` spans `m+1` basis functions and, when `ξ_p < ξ_{m+1}`,
//! defines splines on the domain `[ξ_p, ξ_{m+1}]`. Basis values are
//! left-continuous at the right end of the domain so that partition of unity
//! holds on the closed interval.

pub(crate) mod bezier;

pub use bezier::{bernstein_basis, BezierSegment};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{Point2, Rect};

/// Knots closer than this fraction of the domain length are treated as equal.
pub const KNOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < degree + 2 {
            return Err(Error::InvalidKnots(format!(
                "degree {degree} needs at least {} knots, got {}",
                degree + 2,
                knots.len()
            )));
        }
        if let Some(k) = knots.iter().find(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots(format!("non-finite knot {k}")));
        }
        if let Some(w) = knots.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots(format!(
                "knots must be nondecreasing ({} > {})",
                w[0], w[1]
            )));
        }
        for j in 0..knots.len() - degree - 1 {
            if knots[j] >= knots[j + degree + 1] {
                return Err(Error::InvalidKnots(format!(
                    "basis function {j} degenerates (knot {} repeated more than {} times)",
                    knots[j],
                    degree + 1
                )));
            }
        }
        Ok(KnotVector { degree, knots })
    }

    /// Clamped (open) knot vector: simple interior knots, end knots repeated
    /// `degree + 1` times.
    pub fn clamped(degree: usize, breakpoints: &[f64]) -> Result<Self> {
        let pairs: Vec<(f64, usize)> = breakpoints.iter().map(|&b| (b, 1)).collect();
        Self::clamped_with_multiplicities(degree, &pairs)
    }

    /// Clamped knot vector from distinct breakpoints and interior
    /// multiplicities; the multiplicities of the first and last breakpoint are
    /// ignored and set to `degree + 1`.
    pub fn clamped_with_multiplicities(degree: usize, breaks: &[(f64, usize)]) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::InvalidBreakpoints(format!(
                "need at least two breakpoints, got {}",
                breaks.len()
            )));
        }
        if breaks.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidBreakpoints(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let last = breaks.len() - 1;
        let mut knots = Vec::new();
        for (i, &(x, mult)) in breaks.iter().enumerate() {
            let m = if i == 0 || i == last { degree + 1 } else { mult };
            if m > degree + 1 {
                return Err(Error::InvalidKnots(format!(
                    "multiplicity {m} at {x} exceeds degree + 1"
                )));
            }
            knots.extend(std::iter::repeat_n(x, m));
        }
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `m + 1`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// `[ξ_0, ξ_last]`, the union of all basis supports.
    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// `[ξ_p, ξ_{m+1}]` when it is a nonempty interval.
    pub fn domain(&self) -> Option<(f64, f64)> {
        let lo = self.knots[self.degree];
        let hi = self.knots[self.dim()];
        (lo < hi).then_some((lo, hi))
    }

    pub(crate) fn domain_or_err(&self) -> Result<(f64, f64)> {
        self.domain().ok_or_else(|| {
            Error::InvalidKnots(format!(
                "knot vector of degree {} with {} basis functions has an empty domain",
                self.degree,
                self.dim()
            ))
        })
    }

    /// Support `[ξ_j, ξ_{j+p+1}]` of basis function `j`.
    pub fn support(&self, j: usize) -> (f64, f64) {
        (self.knots[j], self.knots[j + self.degree + 1])
    }

    /// Distinct breakpoints of the domain with their multiplicities.
    pub fn breakpoints(&self) -> Vec<(f64, usize)> {
        let Some((lo, hi)) = self.domain() else {
            return Vec::new();
        };
        let tol = KNOT_TOL * (hi - lo);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.knots {
            if k < lo - tol || k > hi + tol {
                continue;
            }
            match out.last_mut() {
                Some((x, m)) if (k - *x).abs() <= tol => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Multiplicity of `x` as a knot (zero when `x` is not a knot).
    pub fn multiplicity(&self, x: f64, tol: f64) -> usize {
        self.knots.iter().filter(|&&k| (k - x).abs() <= tol).count()
    }

    /// Index `k ∈ [p, m]` of the nonempty span `[ξ_k, ξ_{k+1})` containing `t`;
    /// the right domain end maps to the last nonempty span.
    pub fn span(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.domain_or_err()?;
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let p = self.degree;
        let n = self.dim();
        if t >= hi {
            let mut k = n - 1;
            while self.knots[k] >= self.knots[k + 1] {
                k -= 1;
            }
            return Ok(k);
        }
        // largest k in [p, n-1] with ξ_k <= t
        let slice = &self.knots[p..=n];
        let pos = slice.partition_point(|&k| k <= t);
        Ok(p + pos - 1)
    }

    /// Nonempty spans of the domain as `(k, ξ_k, ξ_{k+1})`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        if self.domain().is_none() {
            return Vec::new();
        }
        (self.degree..self.dim())
            .filter(|&k| self.knots[k] < self.knots[k + 1])
            .map(|k| (k, self.knots[k], self.knots[k + 1]))
            .collect()
    }

    /// Value of `B_{j,p}(t)` by the Cox–de Boor recurrence.
    pub fn eval_basis(&self, j: usize, t: f64) -> Result<f64> {
        let n = self.dim();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, dim: n });
        }
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&t) || t.is_nan() {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let right = self.domain().map_or(hi, |d| d.1);
        Ok(self.cox_de_boor(j, t, t == right))
    }

    fn cox_de_boor(&self, j: usize, t: f64, left_continuous: bool) -> f64 {
        let p = self.degree;
        let xi = &self.knots[j..j + p + 2];
        let mut n: Vec<f64> = (0..=p)
            .map(|i| {
                let inside = if left_continuous {
                    xi[i] < t && t <= xi[i + 1]
                } else {
                    xi[i] <= t && t < xi[i + 1]
                };
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        for r in 1..=p {
            for i in 0..=p - r {
                let left = if xi[i + r] > xi[i] {
                    (t - xi[i]) / (xi[i + r] - xi[i]) * n[i]
                } else {
                    0.0
                };
                let right = if xi[i + r + 1] > xi[i + 1] {
                    (xi[i + r + 1] - t) / (xi[i + r + 1] - xi[i + 1]) * n[i + 1]
                } else {
                    0.0
                };
                n[i] = left + right;
            }
        }
        n[0]
    }

    /// Values of the `p + 1` basis functions nonzero on the span containing
    /// `t`, as `(span, values)` with `values[r] = B_{span-p+r}(t)`.
    pub fn eval_nonzero_basis(&self, t: f64) -> Result<(usize, Vec<f64>)> {
        let k = self.span(t)?;
        let p = self.degree;
        let xi = &self.knots;
        let mut vals = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        vals[0] = 1.0;
        for r in 1..=p {
            left[r] = t - xi[k + 1 - r];
            right[r] = xi[k + r] - t;
            let mut saved = 0.0;
            for i in 0..r {
                let tmp = vals[i] / (right[i + 1] + left[r - i]);
                vals[i] = saved + right[i + 1] * tmp;
                saved = left[r - i] * tmp;
            }
            vals[r] = saved;
        }
        Ok((k, vals))
    }

    /// Greville abscissae `γ_j = (ξ_{j+1} + … + ξ_{j+p}) / p`; for degree zero
    /// the midpoints of the basis supports.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.dim())
            .map(|j| {
                if p == 0 {
                    0.5 * (self.knots[j] + self.knots[j + 1])
                } else {
                    self.knots[j + 1..=j + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Clamped knot vector of the same degree on `[a, b]` keeping the interior
    /// knots of `self` that fall strictly inside.
    pub fn restricted(&self, a: f64, b: f64) -> Result<KnotVector> {
        let (lo, hi) = self.domain_or_err()?;
        let tol = KNOT_TOL * (hi - lo);
        if a < lo - tol || b > hi + tol || a >= b {
            return Err(Error::DomainMismatch { a0: lo, a1: hi, b0: a, b1: b });
        }
        let mut breaks = vec![(a, self.degree + 1)];
        for (x, m) in self.breakpoints() {
            if x > a + tol && x < b - tol {
                breaks.push((x, m));
            }
        }
        breaks.push((b, self.degree + 1));
        Self::clamped_with_multiplicities(self.degree, &breaks)
    }
}

/// Plain-text form `degree | k0, k1, ...`.
impl fmt::Display for KnotVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |", self.degree)?;
        for (i, k) in self.knots.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{k:?}")?;
        }
        Ok(())
    }
}

impl FromStr for KnotVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (deg, list) = s
            .split_once('|')
            .ok_or_else(|| Error::InvalidKnots(format!("expected `degree | knots`, got `{s}`")))?;
        let degree = deg
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::InvalidKnots(format!("bad degree `{}`: {e}", deg.trim())))?;
        let knots = list
            .split(',')
            .map(|k| {
                k.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidKnots(format!("bad knot `{}`: {e}", k.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        KnotVector::new(degree, knots)
    }
}

/// `σ(t) = Σ_j λ_j B_{j,p}(t)` on the domain of its knot vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Spline1D {
    basis: KnotVector,
    coeffs: Vec<f64>,
}

impl Spline1D {
    pub fn new(basis: KnotVector, coeffs: Vec<f64>) -> Result<Self> {
        basis.domain_or_err()?;
        if coeffs.len() != basis.dim() {
            return Err(Error::LengthMismatch { expected: basis.dim(), found: coeffs.len() });
        }
        Ok(Spline1D { basis, coeffs })
    }

    pub fn basis(&self) -> &KnotVector {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn domain(&self) -> (f64, f64) {
        self.basis.domain().expect("validated on construction")
    }

    /// de Boor evaluation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let k = self.basis.span(t)?;
        let p = self.degree();
        let args = vec![t; p];
        Ok(self.blossom_on_span(k, &args))
    }

    /// Polar form of the polynomial piece on span `k` at `args` (`p` values).
    pub(crate) fn blossom_on_span(&self, k: usize, args: &[f64]) -> f64 {
        let p = self.degree();
        debug_assert_eq!(args.len(), p);
        let xi = &self.basis.knots;
        let mut d: Vec<f64> = self.coeffs[k - p..=k].to_vec();
        for r in 1..=p {
            let u = args[r - 1];
            for j in (r..=p).rev() {
                let i = k - p + j;
                let denom = xi[i + p + 1 - r] - xi[i];
                let alpha = if denom > 0.0 { (u - xi[i]) / denom } else { 0.0 };
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[p]
    }
}

/// `σ(t₁,t₂) = Σ_{i,j} λ_{i,j} B_{i,p₁}(t₁) B_{j,p₂}(t₂)`; coefficients are
/// stored lexicographically, `λ_{i,j}` at `i * dim_v + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSpline2D {
    basis_u: KnotVector,
    basis_v: KnotVector,
    coeffs: Vec<f64>,
}

impl TensorSpline2D {
    pub fn new(basis_u: KnotVector, basis_v: KnotVector, coeffs: Vec<f64>) -> Result<Self> {
        basis_u.domain_or_err()?;
        basis_v.domain_or_err()?;
        let expected = basis_u.dim() * basis_v.dim();
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch { expected, found: coeffs.len() });
        }
        Ok(TensorSpline2D { basis_u, basis_v, coeffs })
    }

    pub fn basis_u(&self) -> &KnotVector {
        &self.basis_u
    }

    pub fn basis_v(&self) -> &KnotVector {
        &self.basis_v
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.basis_v.dim() + j]
    }

    pub fn domain(&self) -> Rect {
        let (u0, u1) = self.basis_u.domain().expect("validated");
        let (v0, v1) = self.basis_v.domain().expect("validated");
        Rect::new(u0, u1, v0, v1)
    }

    pub fn eval(&self, t: Point2) -> Result<f64> {
        let (ku, bu) = self.basis_u.eval_nonzero_basis(t[0])?;
        let (kv, bv) = self.basis_v.eval_nonzero_basis(t[1])?;
        let (pu, pv) = (self.basis_u.degree, self.basis_v.degree);
        let nv = self.basis_v.dim();
        let mut acc = 0.0;
        for (a, wu) in bu.iter().enumerate() {
            let i = ku - pu + a;
            let row = &self.coeffs[i * nv..(i + 1) * nv];
            let inner: f64 = bv.iter().enumerate().map(|(b, wv)| wv * row[kv - pv + b]).sum();
            acc += wu * inner;
        }
        Ok(acc)
    }
}

/// A single tensor-product B-spline `B_{I,d}(t) = N_u(t₁) N_v(t₂)` given by
/// its `d_k + 2` local knots in each direction.
#[derive(Clone, Debug, PartialEq)]
pub struct BSplineWeight {
    degree: [usize; 2],
    basis_u: KnotVector,
    basis_v: KnotVector,
}

impl BSplineWeight {
    pub fn new(degree: [usize; 2], knots_u: Vec<f64>, knots_v: Vec<f64>) -> Result<Self> {
        for (k, knots) in [&knots_u, &knots_v].into_iter().enumerate() {
            if knots.len() != degree[k] + 2 {
                return Err(Error::InvalidKnots(format!(
                    "weight of degree {} needs {} knots, got {}",
                    degree[k],
                    degree[k] + 2,
                    knots.len()
                )));
            }
        }
        Ok(BSplineWeight {
            degree,
            basis_u: KnotVector::new(degree[0], knots_u)?,
            basis_v: KnotVector::new(degree[1], knots_v)?,
        })
    }

    /// Uniform simple knots over `support`.
    pub fn uniform(degree: [usize; 2], support: Rect) -> Result<Self> {
        let lin = |d: usize, [a, b]: [f64; 2]| -> Vec<f64> {
            (0..d + 2).map(|i| a + (b - a) * i as f64 / (d + 1) as f64).collect()
        };
        Self::new(degree, lin(degree[0], support.u), lin(degree[1], support.v))
    }

    pub fn degree(&self) -> [usize; 2] {
        self.degree
    }

    pub fn knots_u(&self) -> &[f64] {
        self.basis_u.knots()
    }

    pub fn knots_v(&self) -> &[f64] {
        self.basis_v.knots()
    }

    /// The support rectangle `R_I`.
    pub fn support(&self) -> Rect {
        let (u0, u1) = self.basis_u.range();
        let (v0, v1) = self.basis_v.range();
        Rect::new(u0, u1, v0, v1)
    }

    pub fn eval(&self, t: Point2) -> f64 {
        let eval = |kv: &KnotVector, x: f64| kv.eval_basis(0, x).unwrap_or(0.0);
        eval(&self.basis_u, t[0]) * eval(&self.basis_v, t[1])
    }

    /// The univariate factor in direction `dir` written as a spline on the
    /// clamped knot vector over its support.
    pub fn factor(&self, dir: usize) -> Spline1D {
        let (d, knots) = match dir {
            0 => (self.degree[0], self.basis_u.knots()),
            _ => (self.degree[1], self.basis_v.knots()),
        };
        let first = knots[0];
        let last = *knots.last().unwrap();
        let lead = d + 1 - knots.iter().filter(|&&k| k == first).count();
        let trail = d + 1 - knots.iter().filter(|&&k| k == last).count();
        let mut clamped = vec![first; lead];
        clamped.extend_from_slice(knots);
        clamped.extend(std::iter::repeat_n(last, trail));
        let kv = KnotVector::new(d, clamped).expect("padding keeps the knot vector valid");
        let mut coeffs = vec![0.0; kv.dim()];
        coeffs[lead] = 1.0;
        Spline1D::new(kv, coeffs).expect("valid clamped representation")
    }
}
