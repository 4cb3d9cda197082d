//! Derivative-free local spline quasi-interpolation.
//!
//! A quasi-interpolant computes the B-spline coefficients of the approximant
//! as `λ = C f`, where `f` holds samples at the nodes `τ_0 < … < τ_K` and `C`
//! is banded. The tensor-product operator applies `C_u` along the first
//! direction and `C_v` along the second, which equals `(C_u ⊗ C_v) f` in
//! lexicographic order.

use crate::bspline::{KnotVector, Spline1D, TensorSpline2D};
use crate::error::{Error, Result};
use crate::Point2;

/// One row of a banded coefficient matrix: nonzeros start at column `first`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub first: usize,
    pub weights: Vec<f64>,
}

/// A rule producing the coefficient functionals of a quasi-interpolant.
pub trait QiScheme: Send + Sync {
    fn name(&self) -> &'static str;

    /// Rows of `C` for the spline space `basis` sampled at `nodes`.
    fn rows(&self, basis: &KnotVector, nodes: &[f64]) -> Result<Vec<BandRow>>;
}

/// Local scheme: `λ_j` is the polar form at `ξ_{j+1}, …, ξ_{j+p}` of the
/// degree-`p` polynomial interpolating the samples at the `p + 1` nodes
/// nearest the Greville abscissa `γ_j`.
///
/// Exact on polynomials of degree `≤ p`; stencils near the ends are one-sided.
#[derive(Clone, Copy, Debug, Default)]
pub struct LocalInterpolationBlossom;

impl QiScheme for LocalInterpolationBlossom {
    fn name(&self) -> &'static str {
        "local-interpolation-blossom"
    }

    fn rows(&self, basis: &KnotVector, nodes: &[f64]) -> Result<Vec<BandRow>> {
        let p = basis.degree();
        if nodes.len() < p + 1 {
            return Err(Error::InvalidBreakpoints(format!(
                "{} nodes cannot determine a degree-{p} interpolant",
                nodes.len()
            )));
        }
        let xi = basis.knots();
        let greville = basis.greville();
        let mut rows = Vec::with_capacity(basis.dim());
        for (j, &g) in greville.iter().enumerate() {
            let first = nearest_window(nodes, g, p + 1);
            let stencil = &nodes[first..first + p + 1];
            let args = &xi[j + 1..j + p + 1];
            let weights = (0..=p).map(|k| lagrange_blossom(stencil, k, args)).collect();
            rows.push(BandRow { first, weights });
        }
        Ok(rows)
    }
}

/// Discrete quasi-interpolant from the truncated inverse of the cardinal
/// interpolation symbol.
///
/// Where `B_j` is a cardinal B-spline (uniform simple knots of spacing `h`)
/// and `p + 2` uniformly spaced nodes sit symmetrically around `γ_j`, the row
/// is the unique stencil on those nodes that agrees with the coefficient
/// functional of cardinal spline interpolation on polynomials of degree
/// `≤ p + 1`. For `p = 2` this is `(-1, 5, 5, -1) / 8`, for `p = 3`
/// `(1, -10, 54, -10, 1) / 36`. All other rows use [`LocalInterpolationBlossom`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TruncatedCardinalInverse;

impl TruncatedCardinalInverse {
    /// Symmetric stencil on the offsets `-(p+1)/2, …, (p+1)/2` (unit spacing).
    pub fn stencil(p: usize) -> Result<Vec<f64>> {
        let m = p + 2;
        let centre = (p + 1) as f64 / 2.0;
        let offsets: Vec<f64> = (0..m).map(|k| k as f64 - centre).collect();
        // cardinal B-spline values at the interior nodes, as offsets from the centre
        let values: Vec<(f64, f64)> = (1..=p).map(|x| (x as f64 - centre, cardinal_bspline(p, x as f64))).collect();
        // symbol P(D) = Σ_n M_n D^n / n!, inverted as a power series
        let mut sym = vec![0.0; m];
        let mut fact = 1.0;
        for (n, c) in sym.iter_mut().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            *c = values.iter().map(|(k, b)| b * k.powi(n as i32)).sum::<f64>() / fact;
        }
        let mut inv = vec![0.0; m];
        inv[0] = 1.0 / sym[0];
        for n in 1..m {
            inv[n] = -(1..=n).map(|i| sym[i] * inv[n - i]).sum::<f64>() / sym[0];
        }
        let mut fact = 1.0;
        let rhs = nalgebra::DVector::from_fn(m, |r, _| {
            if r > 0 {
                fact *= r as f64;
            }
            fact * inv[r]
        });
        let vander = nalgebra::DMatrix::from_fn(m, m, |r, k| offsets[k].powi(r as i32));
        let a = vander
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidArgument(format!("singular stencil system for degree {p}")))?;
        Ok(a.iter().copied().collect())
    }
}

/// Cardinal B-spline of degree `p` with knots `0, 1, …, p + 1`.
fn cardinal_bspline(p: usize, x: f64) -> f64 {
    let mut binom = 1.0;
    let mut sum = 0.0;
    for i in 0..=p + 1 {
        if i > 0 {
            binom *= (p + 2 - i) as f64 / i as f64;
        }
        let t = x - i as f64;
        if t > 0.0 {
            sum += if i % 2 == 0 { binom } else { -binom } * t.powi(p as i32);
        }
    }
    sum / (1..=p).map(|k| k as f64).product::<f64>()
}

impl QiScheme for TruncatedCardinalInverse {
    fn name(&self) -> &'static str {
        "truncated-cardinal-inverse"
    }

    fn rows(&self, basis: &KnotVector, nodes: &[f64]) -> Result<Vec<BandRow>> {
        let mut rows = LocalInterpolationBlossom.rows(basis, nodes)?;
        let p = basis.degree();
        let stencil = Self::stencil(p)?;
        let xi = basis.knots();
        let tol = 1e-10 * (nodes[nodes.len() - 1] - nodes[0]).abs().max(1.0);
        for (j, row) in rows.iter_mut().enumerate() {
            let knots = &xi[j..j + p + 2];
            let h = (knots[p + 1] - knots[0]) / (p + 1) as f64;
            if h <= tol || knots.iter().enumerate().any(|(i, &k)| (k - knots[0] - i as f64 * h).abs() > tol) {
                continue;
            }
            let start = (knots[0] + knots[p + 1]) / 2.0 - (p + 1) as f64 / 2.0 * h;
            let Some(lo) = nodes.iter().position(|&t| (t - start).abs() <= tol) else { continue };
            if lo + p + 2 > nodes.len()
                || (0..p + 2).any(|k| (nodes[lo + k] - start - k as f64 * h).abs() > tol)
            {
                continue;
            }
            *row = BandRow { first: lo, weights: stencil.clone() };
        }
        Ok(rows)
    }
}

/// Selects a quasi-interpolation scheme by name.
pub fn qi_scheme(name: &str) -> Result<&'static dyn QiScheme> {
    match name {
        "truncated-cardinal-inverse" | "cardinal" => Ok(&TruncatedCardinalInverse),
        "local-interpolation-blossom" | "blossom" => Ok(&LocalInterpolationBlossom),
        other => Err(Error::InvalidArgument(format!("unknown quasi-interpolation scheme '{other}'"))),
    }
}

/// Start index of the `len` consecutive nodes nearest `x`; ties go left.
fn nearest_window(nodes: &[f64], x: f64, len: usize) -> usize {
    let tie = 1e-12 * (nodes[nodes.len() - 1] - nodes[0]).abs().max(1.0);
    let mut best = 0;
    for (i, &t) in nodes.iter().enumerate() {
        if (t - x).abs() < (nodes[best] - x).abs() - tie {
            best = i;
        }
    }
    let (mut lo, mut hi) = (best, best);
    while hi - lo + 1 < len {
        let left = (lo > 0).then(|| x - nodes[lo - 1]);
        let right = (hi + 1 < nodes.len()).then(|| nodes[hi + 1] - x);
        match (left, right) {
            (Some(l), Some(r)) if l <= r + tie => lo -= 1,
            (Some(_), Some(_)) | (None, Some(_)) => hi += 1,
            (Some(_), None) => lo -= 1,
            (None, None) => unreachable!("window larger than node set"),
        }
    }
    lo
}

/// Polar form of the `k`-th Lagrange basis polynomial of `nodes` at `args`.
///
/// The numerator is a product of linear factors `(x − a_m)`, whose polar
/// form is the symmetrised product `(1/p!) Σ_π Π_m (args_{π(m)} − a_m)`.
fn lagrange_blossom(nodes: &[f64], k: usize, args: &[f64]) -> f64 {
    let roots: Vec<f64> = nodes.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &x)| x).collect();
    let denom: f64 = roots.iter().map(|&r| nodes[k] - r).product();
    let p = roots.len();
    if p == 0 {
        return 1.0;
    }
    let mut perm: Vec<usize> = (0..p).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    permute(&mut perm, 0, &mut |perm| {
        total += perm.iter().zip(&roots).map(|(&r, &a)| args[r] - a).product::<f64>();
        count += 1;
    });
    total / count as f64 / denom
}

fn permute(v: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        visit(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, visit);
        v.swap(start, i);
    }
}

/// A univariate quasi-interpolation operator `λ = C f`.
#[derive(Clone, Debug)]
pub struct QIOperator {
    basis: KnotVector,
    nodes: Vec<f64>,
    rows: Vec<BandRow>,
    scheme: &'static str,
}

/// Default operator of degree `p` on the clamped knot vector with the given
/// breakpoints, sampling at the breakpoints. Uses [`TruncatedCardinalInverse`].
pub fn build_qi(p: usize, breakpoints: &[f64]) -> Result<QIOperator> {
    QIOperator::with_scheme(p, breakpoints, &TruncatedCardinalInverse)
}

impl QIOperator {
    pub fn with_scheme(p: usize, breakpoints: &[f64], scheme: &dyn QiScheme) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("quasi-interpolation needs degree ≥ 1".into()));
        }
        if breakpoints.len() < p + 2 {
            return Err(Error::InvalidBreakpoints(format!(
                "degree {p} needs at least {} breakpoints, got {}",
                p + 2,
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBreakpoints("breakpoints must be strictly increasing".into()));
        }
        let basis = KnotVector::clamped(p, breakpoints)?;
        let nodes = breakpoints.to_vec();
        let rows = scheme.rows(&basis, &nodes)?;
        if rows.len() != basis.dim() {
            return Err(Error::LengthMismatch { expected: basis.dim(), found: rows.len() });
        }
        Ok(QIOperator { basis, nodes, rows, scheme: scheme.name() })
    }

    /// Uniform breakpoints on `[-1, 1]`.
    pub fn uniform(p: usize, n_breakpoints: usize) -> Result<Self> {
        Self::uniform_with_scheme(p, n_breakpoints, &TruncatedCardinalInverse)
    }

    pub fn uniform_with_scheme(p: usize, n_breakpoints: usize, scheme: &dyn QiScheme) -> Result<Self> {
        if n_breakpoints < 2 {
            return Err(Error::InvalidBreakpoints(format!("{n_breakpoints} breakpoints")));
        }
        let b: Vec<f64> = (0..n_breakpoints)
            .map(|i| -1.0 + 2.0 * i as f64 / (n_breakpoints - 1) as f64)
            .collect();
        Self::with_scheme(p, &b, scheme)
    }

    pub fn basis(&self) -> &KnotVector {
        &self.basis
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn rows(&self) -> &[BandRow] {
        &self.rows
    }

    pub fn scheme(&self) -> &'static str {
        self.scheme
    }

    /// `(L, U)`: largest offsets of nonzero columns below and above the row
    /// index.
    pub fn band_profile(&self) -> (usize, usize) {
        self.rows.iter().enumerate().fold((0, 0), |(l, u), (i, r)| {
            let last = r.first + r.weights.len() - 1;
            (l.max(i.saturating_sub(r.first)), u.max(last.saturating_sub(i)))
        })
    }

    /// `max_i Σ_j |C_ij|`.
    pub fn max_abs_row_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.weights.iter().map(|w| w.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Dense copy of `C`, `(m + 1) × (K + 1)`.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![0.0; self.nodes.len()];
                row[r.first..r.first + r.weights.len()].copy_from_slice(&r.weights);
                row
            })
            .collect()
    }

    /// Rows whose nonzero columns sample outside the support of their basis
    /// function. Entries with `|C_ij| ≤ 1e-14` count as zero.
    pub fn support_violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(i, r)| {
                let (a, b) = self.basis.support(*i);
                r.weights
                    .iter()
                    .enumerate()
                    .any(|(c, w)| w.abs() > 1e-14 && !(a..=b).contains(&self.nodes[r.first + c]))
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn coefficients(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.nodes.len() {
            return Err(Error::LengthMismatch { expected: self.nodes.len(), found: samples.len() });
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.weights.iter().zip(&samples[r.first..]).map(|(w, f)| w * f).sum())
            .collect())
    }

    pub fn apply(&self, samples: &[f64]) -> Result<Spline1D> {
        Spline1D::new(self.basis.clone(), self.coefficients(samples)?)
    }

    /// Samples `f` at the nodes and applies the operator.
    pub fn approximate(&self, f: impl Fn(f64) -> f64) -> Result<Spline1D> {
        let samples: Vec<f64> = self.nodes.iter().map(|&t| f(t)).collect();
        self.apply(&samples)
    }
}

/// `λ = C f` in one dimension.
pub fn apply_qi_1d(op: &QIOperator, samples: &[f64]) -> Result<Spline1D> {
    op.apply(samples)
}

/// Samples of a bivariate function on the tensor node grid; `values[a * K₂ + b]`
/// holds `f(τ_a^{(1)}, τ_b^{(2)})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid2D {
    pub nodes_u: Vec<f64>,
    pub nodes_v: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampleGrid2D {
    pub fn new(nodes_u: Vec<f64>, nodes_v: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let expected = nodes_u.len() * nodes_v.len();
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, found: values.len() });
        }
        Ok(SampleGrid2D { nodes_u, nodes_v, values })
    }

    pub fn sample(op_u: &QIOperator, op_v: &QIOperator, f: impl Fn(Point2) -> f64) -> Self {
        let mut values = Vec::with_capacity(op_u.nodes.len() * op_v.nodes.len());
        for &x in &op_u.nodes {
            for &y in &op_v.nodes {
                values.push(f([x, y]));
            }
        }
        SampleGrid2D { nodes_u: op_u.nodes.clone(), nodes_v: op_v.nodes.clone(), values }
    }
}

/// Tensor-product quasi-interpolant: `C_u` along rows, `C_v` along columns.
pub fn apply_qi_tensor(op_u: &QIOperator, op_v: &QIOperator, grid: &SampleGrid2D) -> Result<TensorSpline2D> {
    let (ku, kv) = (op_u.nodes.len(), op_v.nodes.len());
    if grid.nodes_u.len() != ku || grid.nodes_v.len() != kv {
        return Err(Error::LengthMismatch {
            expected: ku * kv,
            found: grid.nodes_u.len() * grid.nodes_v.len(),
        });
    }
    let nv = op_v.basis.dim();
    // apply C_v to each sample row
    let mut half = Vec::with_capacity(ku * nv);
    for a in 0..ku {
        half.extend(op_v.coefficients(&grid.values[a * kv..(a + 1) * kv])?);
    }
    let nu = op_u.basis.dim();
    let mut coeffs = vec![0.0; nu * nv];
    for (i, row) in op_u.rows.iter().enumerate() {
        for (c, w) in row.weights.iter().enumerate() {
            let src = &half[(row.first + c) * nv..(row.first + c + 1) * nv];
            for (dst, s) in coeffs[i * nv..(i + 1) * nv].iter_mut().zip(src) {
                *dst += w * s;
            }
        }
    }
    TensorSpline2D::new(op_u.basis.clone(), op_v.basis.clone(), coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    #[test]
    fn dimensions_for_six_breakpoints() {
        let op = QIOperator::uniform(2, 6).unwrap();
        assert_eq!(op.basis().dim(), 7);
        assert_eq!(op.nodes().len(), 6);
    }

    #[test]
    fn constant_and_linear_reproduction() {
        for p in 1..=4 {
            let op = QIOperator::uniform(p, 9).unwrap();
            let c = op.coefficients(&[1.0; 9]).unwrap();
            assert!(c.iter().all(|x| (x - 1.0).abs() < 1e-13), "p={p}");
            let lin = op.coefficients(op.nodes()).unwrap();
            for (a, g) in lin.iter().zip(op.basis().greville()) {
                assert!((a - g).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reproduces_quadratic() {
        let op = QIOperator::uniform(2, 7).unwrap();
        let s = op.approximate(|t| t * t).unwrap();
        let mut seed = 3;
        for _ in 0..100 {
            let t = -1.0 + 2.0 * lcg(&mut seed);
            assert!((s.eval(t).unwrap() - t * t).abs() < 1e-12);
        }
        let z = op.apply(&[0.0; 7]).unwrap();
        assert!(z.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(build_qi(3, &[-1.0, 0.0, 0.5, 1.0]).is_err());
        assert!(build_qi(2, &[-1.0, 0.0, 0.0, 1.0]).is_err());
        let op = QIOperator::uniform(2, 6).unwrap();
        assert!(matches!(op.coefficients(&[1.0; 5]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn nearest_window_ties_go_left() {
        let nodes = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(nearest_window(&nodes, 1.5, 2), 1);
        assert_eq!(nearest_window(&nodes, 1.5, 3), 0);
        assert_eq!(nearest_window(&nodes, 2.9, 3), 1);
        assert_eq!(nearest_window(&nodes, -4.0, 3), 0);
    }

    #[test]
    fn cardinal_stencils() {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-13);
        let s2 = TruncatedCardinalInverse::stencil(2).unwrap();
        assert!(close(&s2, &[-1.0 / 8.0, 5.0 / 8.0, 5.0 / 8.0, -1.0 / 8.0]), "{s2:?}");
        let s3 = TruncatedCardinalInverse::stencil(3).unwrap();
        let want: Vec<f64> = [1.0, -10.0, 54.0, -10.0, 1.0].iter().map(|x| x / 36.0).collect();
        assert!(close(&s3, &want), "{s3:?}");
        let s1 = TruncatedCardinalInverse::stencil(1).unwrap();
        assert!(close(&s1, &[0.0, 1.0, 0.0]), "{s1:?}");
        assert!((cardinal_bspline(3, 2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn interior_rows_use_the_stencil() {
        let op = QIOperator::uniform(3, 10).unwrap();
        let s3 = TruncatedCardinalInverse::stencil(3).unwrap();
        let interior = op.rows().iter().filter(|r| r.weights == s3).count();
        assert_eq!(interior, 10 - 4);
        let blossom = QIOperator::uniform_with_scheme(3, 10, &LocalInterpolationBlossom).unwrap();
        assert_eq!(op.rows()[0], blossom.rows()[0]);
        assert_eq!(blossom.scheme(), "local-interpolation-blossom");
        // nonuniform breakpoints fall back away from uniform patches
        let nonuni = build_qi(3, &[-1.0, -0.7, -0.2, 0.0, 0.3, 0.9, 1.0]).unwrap();
        assert!(nonuni.rows().iter().all(|r| r.weights.len() == 4));
    }

    #[test]
    fn both_schemes_reproduce_degree_p() {
        for name in ["cardinal", "blossom"] {
            let scheme = qi_scheme(name).unwrap();
            for p in 1..=4 {
                let op = QIOperator::uniform_with_scheme(p, 11, scheme).unwrap();
                let s = op.approximate(|t| (t - 0.2).powi(p as i32)).unwrap();
                for k in 0..=40 {
                    let t = -1.0 + k as f64 / 20.0;
                    assert!((s.eval(t).unwrap() - (t - 0.2).powi(p as i32)).abs() < 1e-12, "{name} p={p}");
                }
            }
        }
        assert!(qi_scheme("nope").is_err());
    }

    #[test]
    fn band_is_narrow() {
        let op = QIOperator::uniform(3, 14).unwrap();
        assert!(op.rows().iter().all(|r| r.weights.len() <= 5));
        assert!(op.rows().windows(2).all(|w| w[0].first <= w[1].first));
        let (l, u) = op.band_profile();
        assert!(l <= 5 && u <= 3, "({l}, {u})");
        assert!(op.max_abs_row_sum() < 100.0);
    }
}
