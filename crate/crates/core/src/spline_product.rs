//! Exact products of splines.
//!
//! Both factors are cut into Bernstein pieces over the union of their
//! breakpoints, the pieces are multiplied in Bernstein form, and the result is
//! recombined into the B-spline basis of the merged knot vector by polar forms.

use std::sync::Arc;

use crate::bspline::{BSplineWeight, BezierSegment, KnotVector, Spline1D, TensorSpline2D, KNOT_TOL};
use crate::error::{Error, Result};
use crate::{Point2, Rect};

/// Knot vector of degree `target_degree` containing every product of a spline
/// on `a` with a spline on `b`.
///
/// At each interior breakpoint the multiplicity is
/// `target − min(p_a − mult_a, p_b − mult_b)`; the ends are clamped.
pub fn merge_knot_vectors(a: &KnotVector, b: &KnotVector, target_degree: usize) -> Result<KnotVector> {
    if target_degree != a.degree() + b.degree() {
        return Err(Error::InvalidArgument(format!(
            "target degree {target_degree} differs from {} + {}",
            a.degree(),
            b.degree()
        )));
    }
    let (a0, a1) = a.domain_or_err()?;
    let (b0, b1) = b.domain_or_err()?;
    let tol = KNOT_TOL * (a1 - a0).max(b1 - b0);
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
        return Err(Error::DomainMismatch { a0, a1, b0, b1 });
    }
    let interior = |kv: &KnotVector| -> Vec<(f64, usize)> {
        let bp = kv.breakpoints();
        bp[1..bp.len() - 1].to_vec()
    };
    let mut xs: Vec<f64> = interior(a).into_iter().chain(interior(b)).map(|(x, _)| x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|x, y| (*x - *y).abs() <= tol);

    let mut breaks = vec![(a0, target_degree + 1)];
    for x in xs {
        let ma = a.multiplicity(x, tol);
        let mb = b.multiplicity(x, tol);
        let smooth_a = a.degree() as isize - ma as isize;
        let smooth_b = b.degree() as isize - mb as isize;
        let m = target_degree as isize - smooth_a.min(smooth_b);
        breaks.push((x, m.clamp(1, target_degree as isize + 1) as usize));
    }
    breaks.push((a1, target_degree + 1));
    KnotVector::clamped_with_multiplicities(target_degree, &breaks)
}

/// Pieces of `f · g` over the spans of `space`.
fn product_pieces(f: &Spline1D, g: &Spline1D, space: &KnotVector) -> Result<Vec<BezierSegment>> {
    space
        .spans()
        .into_iter()
        .map(|(_, x0, x1)| Ok(f.bezier_on(x0, x1)?.product(&g.bezier_on(x0, x1)?)))
        .collect()
}

/// `a · b` in the B-spline basis of the merged knot vector.
pub fn multiply_1d(a: &Spline1D, b: &Spline1D) -> Result<Spline1D> {
    let merged = merge_knot_vectors(a.basis(), b.basis(), a.degree() + b.degree())?;
    let pieces = product_pieces(a, b, &merged)?;
    Spline1D::from_segments(merged, &pieces)
}

/// Tensor spline space of bi-degree `(p₁+d₁, p₂+d₂)` over the weight support.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpace {
    degree: [usize; 2],
    knots_u: KnotVector,
    knots_v: KnotVector,
    support: Rect,
    element_scale: f64,
}

impl ProductSpace {
    /// A space from explicit knot vectors; the support is their domain and
    /// the element scale the shortest nonempty span.
    pub fn new(knots_u: KnotVector, knots_v: KnotVector) -> Result<Self> {
        let (u0, u1) = knots_u.domain_or_err()?;
        let (v0, v1) = knots_v.domain_or_err()?;
        let min_span = |kv: &KnotVector| kv.spans().iter().map(|s| s.2 - s.1).fold(f64::INFINITY, f64::min);
        let element_scale = min_span(&knots_u).min(min_span(&knots_v));
        Ok(ProductSpace {
            degree: [knots_u.degree(), knots_v.degree()],
            knots_u,
            knots_v,
            support: Rect::new(u0, u1, v0, v1),
            element_scale,
        })
    }

    pub fn degree(&self) -> [usize; 2] {
        self.degree
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn support(&self) -> Rect {
        self.support
    }

    /// Length scale of the elements of `R_I`; sources farther than half of it
    /// from the support are rejected by the moment computation.
    pub fn element_scale(&self) -> f64 {
        self.element_scale
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.knots_u.dim(), self.knots_v.dim()]
    }

    pub fn dim(&self) -> usize {
        self.knots_u.dim() * self.knots_v.dim()
    }

    /// Lexicographic index of `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.knots_v.dim() + j
    }
}

/// `λ^Π`: coefficients of `σ · B_{I,d}` in the product space.
#[derive(Clone, Debug)]
pub struct ProductCoefficients {
    pub space: Arc<ProductSpace>,
    pub lambda_pi: Vec<f64>,
}

impl ProductCoefficients {
    pub fn to_spline(&self) -> TensorSpline2D {
        TensorSpline2D::new(
            self.space.knots_u.clone(),
            self.space.knots_v.clone(),
            self.lambda_pi.clone(),
        )
        .expect("coefficients match the space")
    }

    pub fn eval(&self, t: Point2) -> Result<f64> {
        self.to_spline().eval(t)
    }
}

/// Multiplies tensor splines on fixed bases by a fixed B-spline weight.
///
/// Since `σ B = Σ λ_ij (B_i N_u)(t₁) (B_j N_v)(t₂)`, the product coefficients
/// are `T_uᵀ Λ T_v` where row `i` of `T_u` holds the coefficients of
/// `B_i N_u` in the merged space.
#[derive(Clone, Debug)]
pub struct TensorMultiplier {
    space: Arc<ProductSpace>,
    transfer_u: Vec<Vec<f64>>,
    transfer_v: Vec<Vec<f64>>,
    sigma_dims: [usize; 2],
}

impl TensorMultiplier {
    pub fn new(sigma_u: &KnotVector, sigma_v: &KnotVector, weight: &BSplineWeight) -> Result<Self> {
        let support = weight.support();
        let d = weight.degree();
        let mut kvs = Vec::new();
        let mut transfers = Vec::new();
        for (dir, sigma_kv) in [sigma_u, sigma_v].into_iter().enumerate() {
            let [a, b] = if dir == 0 { support.u } else { support.v };
            let (lo, hi) = sigma_kv.domain_or_err()?;
            let tol = KNOT_TOL * (hi - lo);
            if a < lo - tol || b > hi + tol {
                return Err(Error::DomainMismatch { a0: lo, a1: hi, b0: a, b1: b });
            }
            let factor = weight.factor(dir);
            let restricted = sigma_kv.restricted(a.max(lo), b.min(hi))?;
            let merged = merge_knot_vectors(&restricted, factor.basis(), sigma_kv.degree() + d[dir])?;
            let mut rows = Vec::with_capacity(sigma_kv.dim());
            for i in 0..sigma_kv.dim() {
                let (s0, s1) = sigma_kv.support(i);
                if s1 <= a || s0 >= b {
                    rows.push(vec![0.0; merged.dim()]);
                    continue;
                }
                let mut unit = vec![0.0; sigma_kv.dim()];
                unit[i] = 1.0;
                let bi = Spline1D::new(sigma_kv.clone(), unit)?;
                let pieces = product_pieces(&bi, &factor, &merged)?;
                rows.push(Spline1D::from_segments(merged.clone(), &pieces)?.coeffs().to_vec());
            }
            kvs.push(merged);
            transfers.push(rows);
        }
        let knots_v = kvs.pop().unwrap();
        let knots_u = kvs.pop().unwrap();
        let transfer_v = transfers.pop().unwrap();
        let transfer_u = transfers.pop().unwrap();
        let mut space = ProductSpace::new(knots_u, knots_v)?;
        space.element_scale = weight_element_scale(weight);
        Ok(TensorMultiplier {
            space: Arc::new(space),
            transfer_u,
            transfer_v,
            sigma_dims: [sigma_u.dim(), sigma_v.dim()],
        })
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    /// Row `i` holds the product-space coefficients of `B_i N` in direction `dir`.
    pub fn transfer(&self, dir: usize) -> &[Vec<f64>] {
        if dir == 0 {
            &self.transfer_u
        } else {
            &self.transfer_v
        }
    }

    pub fn multiply(&self, sigma: &TensorSpline2D) -> Result<ProductCoefficients> {
        let [nu, nv] = self.sigma_dims;
        if sigma.basis_u().dim() != nu || sigma.basis_v().dim() != nv {
            return Err(Error::LengthMismatch {
                expected: nu * nv,
                found: sigma.basis_u().dim() * sigma.basis_v().dim(),
            });
        }
        let [pu, pv] = self.space.dims();
        let lam = sigma.coeffs();
        // Λ T_v
        let mut half = vec![0.0; nu * pv];
        for i in 0..nu {
            for j in 0..nv {
                let c = lam[i * nv + j];
                if c == 0.0 {
                    continue;
                }
                for (dst, t) in half[i * pv..(i + 1) * pv].iter_mut().zip(&self.transfer_v[j]) {
                    *dst += c * t;
                }
            }
        }
        // T_uᵀ (Λ T_v)
        let mut out = vec![0.0; pu * pv];
        for i in 0..nu {
            let row = &half[i * pv..(i + 1) * pv];
            for (a, &t) in self.transfer_u[i].iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                for (dst, h) in out[a * pv..(a + 1) * pv].iter_mut().zip(row) {
                    *dst += t * h;
                }
            }
        }
        Ok(ProductCoefficients { space: self.space.clone(), lambda_pi: out })
    }
}

fn weight_element_scale(weight: &BSplineWeight) -> f64 {
    let spans = |k: &[f64]| k.windows(2).map(|w| w[1] - w[0]).filter(|h| *h > 0.0).fold(f64::INFINITY, f64::min);
    spans(weight.knots_u()).min(spans(weight.knots_v()))
}

/// Coefficients of `σ · B_{I,d}` over `R_I` in the product space.
pub fn multiply_tensor(sigma: &TensorSpline2D, weight: &BSplineWeight) -> Result<ProductCoefficients> {
    TensorMultiplier::new(sigma.basis_u(), sigma.basis_v(), weight)?.multiply(sigma)
}
