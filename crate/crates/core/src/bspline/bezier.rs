//! Bernstein pieces and Bézier extraction of splines.

use super::{KnotVector, Spline1D};
use crate::error::{Error, Result};

/// A polynomial on `[a, b]` in Bernstein form.
#[derive(Clone, Debug, PartialEq)]
pub struct BezierSegment {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

/// All Bernstein basis polynomials of degree `n` at local parameter `u`.
pub fn bernstein_basis(n: usize, u: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    bernstein_basis_into(n, u, &mut out);
    out
}

pub(crate) fn bernstein_basis_into(n: usize, u: f64, out: &mut [f64]) {
    out[0] = 1.0;
    let v = 1.0 - u;
    for j in 1..=n {
        let mut saved = 0.0;
        for k in 0..j {
            let tmp = out[k];
            out[k] = saved + v * tmp;
            saved = u * tmp;
        }
        out[j] = saved;
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl BezierSegment {
    pub fn new(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        debug_assert!(a < b && !coeffs.is_empty());
        BezierSegment { a, b, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// de Casteljau evaluation (also valid outside `[a, b]`).
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.degree();
        self.blossom(&vec![t; n])
    }

    /// Polar form at `args` (exactly `degree` values).
    pub fn blossom(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.degree());
        let h = self.b - self.a;
        let mut c = self.coeffs.clone();
        let n = c.len() - 1;
        for (r, &x) in args.iter().enumerate() {
            let u = (x - self.a) / h;
            for i in 0..n - r {
                c[i] = (1.0 - u) * c[i] + u * c[i + 1];
            }
        }
        c[0]
    }

    /// Exact product in Bernstein form; both factors must share the interval.
    pub fn product(&self, other: &BezierSegment) -> BezierSegment {
        debug_assert!(self.a == other.a && self.b == other.b);
        let (p, d) = (self.degree(), other.degree());
        let mut out = vec![0.0; p + d + 1];
        for (i, fi) in self.coeffs.iter().enumerate() {
            let wi = binomial(p, i);
            for (j, gj) in other.coeffs.iter().enumerate() {
                out[i + j] += wi * binomial(d, j) * fi * gj;
            }
        }
        for (k, c) in out.iter_mut().enumerate() {
            *c /= binomial(p + d, k);
        }
        BezierSegment::new(self.a, self.b, out)
    }

    /// The same polynomial in Bernstein form over `[c, e]`.
    pub fn reparametrize(&self, c: f64, e: f64) -> BezierSegment {
        let n = self.degree();
        let coeffs = (0..=n)
            .map(|i| {
                let mut args = vec![c; n - i];
                args.extend(std::iter::repeat_n(e, i));
                self.blossom(&args)
            })
            .collect();
        BezierSegment::new(c, e, coeffs)
    }

    pub fn integral(&self) -> f64 {
        (self.b - self.a) * self.coeffs.iter().sum::<f64>() / self.coeffs.len() as f64
    }
}

impl Spline1D {
    /// Bernstein pieces on every nonempty knot span of the domain.
    pub fn bezier_extract(&self) -> Vec<BezierSegment> {
        self.basis
            .spans()
            .into_iter()
            .map(|(k, a, b)| self.bernstein_on_span(k, a, b))
            .collect()
    }

    /// Bernstein form of the spline over `[a, b]`, which must lie inside a
    /// single knot span.
    pub fn bezier_on(&self, a: f64, b: f64) -> Result<BezierSegment> {
        let (lo, hi) = self.domain();
        if a < lo || b > hi || a >= b {
            return Err(Error::OutOfDomain { t: if a < lo { a } else { b }, lo, hi });
        }
        let k = self.basis.span(0.5 * (a + b))?;
        let xi = self.basis.knots();
        let tol = super::KNOT_TOL * (hi - lo);
        if a < xi[k] - tol || b > xi[k + 1] + tol {
            return Err(Error::InvalidArgument(format!(
                "[{a}, {b}] crosses a knot of the spline"
            )));
        }
        Ok(self.bernstein_on_span(k, a, b))
    }

    fn bernstein_on_span(&self, k: usize, a: f64, b: f64) -> BezierSegment {
        let p = self.degree();
        let coeffs = (0..=p)
            .map(|i| {
                let mut args = vec![a; p - i];
                args.extend(std::iter::repeat_n(b, i));
                self.blossom_on_span(k, &args)
            })
            .collect();
        BezierSegment::new(a, b, coeffs)
    }

    /// Spline in the space of `basis` whose pieces are `segments`.
    ///
    /// Every span of `basis` must lie inside one segment and the piecewise
    /// polynomial must have the smoothness the knot multiplicities demand;
    /// each coefficient is then the polar form of a piece at the knots
    /// `ξ_{j+1}, …, ξ_{j+p}`.
    pub fn from_segments(basis: KnotVector, segments: &[BezierSegment]) -> Result<Spline1D> {
        let (lo, hi) = basis.domain_or_err()?;
        let p = basis.degree();
        let n = basis.dim();
        let xi = basis.knots().to_vec();
        let mut coeffs = Vec::with_capacity(n);
        for j in 0..n {
            let args = &xi[j + 1..j + p + 1];
            let mut best: Option<(f64, usize)> = None;
            for k in j.max(p)..=(j + p).min(n - 1) {
                let (a, b) = (xi[k], xi[k + 1]);
                if a >= b {
                    continue;
                }
                let h = b - a;
                let excess = args
                    .iter()
                    .map(|&x| ((a - x).max(x - b)).max(0.0) / h)
                    .fold(0.0, f64::max);
                if best.is_none_or(|(e, _)| excess < e) {
                    best = Some((excess, k));
                }
            }
            let (_, k) = best.ok_or_else(|| {
                Error::InvalidKnots(format!("basis function {j} has no span in the domain"))
            })?;
            let mid = 0.5 * (xi[k] + xi[k + 1]);
            let seg = segments
                .iter()
                .find(|s| s.a <= mid && mid <= s.b)
                .ok_or(Error::OutOfDomain { t: mid, lo, hi })?;
            if seg.degree() != p {
                return Err(Error::InvalidArgument(format!(
                    "segment degree {} differs from basis degree {p}",
                    seg.degree()
                )));
            }
            coeffs.push(seg.blossom(args));
        }
        Spline1D::new(basis, coeffs)
    }
}
