//! Randomized invariants of the spline, geometry and cubature layers.

use std::sync::Arc;

use proptest::prelude::*;

use sqicube::bspline::BezierSegment;
use sqicube::cubature::{jacobian_sampler, CubatureRule, IntegrandSampler};
use sqicube::experiment::ExperimentConfig;
use sqicube::geometry::{builtin_surface, first_fundamental_form, jacobian, rho, BuiltinSurface, Surface};
use sqicube::quasi_interp::{qi_scheme, QIOperator};
use sqicube::spline_product::{multiply_1d, multiply_tensor};
use sqicube::{BSplineWeight, KnotVector, MetricMatrix, Rect, SingularQuadConfig, Spline1D, TensorSpline2D};

/// Sorted distinct breakpoints on `[-1, 1]` with both ends included.
fn breakpoints(max_inner: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.95f64..0.95, 0..=max_inner).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut out = vec![-1.0];
        out.extend(v);
        out.push(1.0);
        out
    })
}

fn random_spline(p: usize, breaks: Vec<f64>, seed: Vec<f64>) -> Spline1D {
    let kv = KnotVector::clamped(p, &breaks).unwrap();
    let coeffs = (0..kv.dim()).map(|i| seed[i % seed.len()]).collect();
    Spline1D::new(kv, coeffs).unwrap()
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(p in 0usize..5, breaks in breakpoints(6), t in -1.0f64..=1.0) {
        let kv = KnotVector::clamped(p, &breaks).unwrap();
        let (_, vals) = kv.eval_nonzero_basis(t).unwrap();
        prop_assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(vals.iter().all(|&v| v >= -1e-14));
        let full: f64 = (0..kv.dim()).map(|j| kv.eval_basis(j, t).unwrap()).sum();
        prop_assert!((full - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bezier_extraction_is_exact(
        p in 1usize..5,
        breaks in breakpoints(5),
        seed in prop::collection::vec(-2.0f64..2.0, 1..8),
        t in -1.0f64..=1.0,
    ) {
        let s = random_spline(p, breaks, seed);
        let segs = s.bezier_extract();
        let seg = segs.iter().find(|g| g.a <= t && t <= g.b).unwrap();
        prop_assert!((seg.eval(t) - s.eval(t).unwrap()).abs() < 1e-12);
        let back = Spline1D::from_segments(s.basis().clone(), &segs).unwrap();
        for (x, y) in back.coeffs().iter().zip(s.coeffs()) {
            prop_assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn quasi_interpolants_reproduce_polynomials(
        p in 1usize..5,
        n in 6usize..16,
        scheme in prop::sample::select(vec!["truncated-cardinal-inverse", "local-interpolation-blossom"]),
        c in prop::collection::vec(-1.0f64..1.0, 5),
        t in -1.0f64..=1.0,
    ) {
        let op = QIOperator::uniform_with_scheme(p, n, qi_scheme(scheme).unwrap()).unwrap();
        let coeffs = &c[..=p];
        let q = op.approximate(|x| poly(coeffs, x)).unwrap();
        prop_assert!((q.eval(t).unwrap() - poly(coeffs, t)).abs() < 1e-12);
        prop_assert!(op.rows().iter().all(|r| r.weights.len() <= p + 2));
    }

    #[test]
    fn univariate_products_are_exact(
        p in 0usize..4,
        q in 0usize..4,
        ba in breakpoints(4),
        bb in breakpoints(4),
        sa in prop::collection::vec(-2.0f64..2.0, 1..6),
        sb in prop::collection::vec(-2.0f64..2.0, 1..6),
        t in -1.0f64..=1.0,
    ) {
        let a = random_spline(p, ba, sa);
        let b = random_spline(q, bb, sb);
        let ab = multiply_1d(&a, &b).unwrap();
        prop_assert_eq!(ab.degree(), p + q);
        let exact = a.eval(t).unwrap() * b.eval(t).unwrap();
        prop_assert!((ab.eval(t).unwrap() - exact).abs() < 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn tensor_products_with_the_weight_are_exact(
        d in 1usize..4,
        p in 1usize..4,
        n in 6usize..10,
        seed in prop::collection::vec(-1.0f64..1.0, 1..9),
        t in (-1.0f64..=1.0, -1.0f64..=1.0),
    ) {
        let weight = BSplineWeight::uniform([d, d], Rect::reference()).unwrap();
        let op = QIOperator::uniform(p, n).unwrap();
        let kv = op.basis().clone();
        let m = kv.dim();
        let coeffs = (0..m * m).map(|i| seed[i % seed.len()]).collect();
        let sigma = TensorSpline2D::new(kv.clone(), kv, coeffs).unwrap();
        let prod = multiply_tensor(&sigma, &weight).unwrap();
        let t = [t.0, t.1];
        let exact = sigma.eval(t).unwrap() * weight.eval(t);
        prop_assert!((prod.eval(t).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn first_fundamental_form_determinant(t in (-1.0f64..=1.0, -1.0f64..=1.0), r in 0.5f64..4.0) {
        let t = [t.0, t.1];
        for surf in [BuiltinSurface::Plane, BuiltinSurface::Cylinder { radius: r }, BuiltinSurface::Hyperboloid] {
            let a = first_fundamental_form(&surf, t).unwrap();
            let j = jacobian(&surf, t).unwrap();
            prop_assert!((j * j - a.det()).abs() < 1e-12 * (1.0 + a.det()));
            let (lo, hi) = a.eigenvalues();
            prop_assert!(lo > 0.0 && lo <= hi);
        }
    }

    #[test]
    fn rho_tends_to_one(s in (-0.9f64..0.9, -0.9f64..0.9), angle in 0.0f64..std::f64::consts::TAU) {
        let s = [s.0, s.1];
        let surf = BuiltinSurface::Hyperboloid;
        for k in 2..6 {
            let h = 10f64.powi(-k);
            let t = [s[0] + h * angle.cos(), s[1] + h * angle.sin()];
            let dev = (rho(&surf, s, t).unwrap() - 1.0).abs();
            // Cancellation in |X(t) - X(s)| costs about eps / h.
            prop_assert!(dev <= 5.0 * h + 1e-14 / h, "h={h}: |rho - 1| = {dev}");
        }
    }

    #[test]
    fn knot_vectors_round_trip_through_text(p in 0usize..5, breaks in breakpoints(5)) {
        let kv = KnotVector::clamped(p, &breaks).unwrap();
        let back: KnotVector = kv.to_string().parse().unwrap();
        prop_assert_eq!(back, kv);
    }

    #[test]
    fn config_hash_tracks_the_config(e in 1u8..=4, d in 1usize..4, p in 1usize..4) {
        let mut a = ExperimentConfig::preset(e).unwrap();
        a.d = d;
        a.p = p;
        let b = a.clone();
        prop_assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.ns.push(16);
        prop_assert_ne!(a.hash(), c.hash());
        let mut c = a.clone();
        c.quad.gauss_order += 1;
        prop_assert_ne!(a.hash(), c.hash());
    }
}

fn rule(d: usize, p: usize, n: usize) -> CubatureRule {
    let weight = BSplineWeight::uniform([d, d], Rect::reference()).unwrap();
    CubatureRule::new(weight, p, n, SingularQuadConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn moments_are_positive_and_mirror_symmetric(
        d in 1usize..4,
        s in (-1.15f64..1.15, -1.15f64..1.15),
        metric in (1.0f64..3.0, 1.0f64..3.0),
    ) {
        let r = rule(d, 2, 6);
        let a = MetricMatrix::new(metric.0, 0.0, metric.1).unwrap();
        let s = [s.0, s.1];
        let mu = r.moments(&a, s).unwrap();
        prop_assert!(mu.values.iter().all(|&m| m >= 0.0));
        // u -> -u maps basis function (i, j) of the symmetric product space to (m-1-i, j).
        let mirrored = r.moments(&a, [-s[0], s[1]]).unwrap();
        let [mu_dim, mv_dim] = r.space().dims();
        for i in 0..mu_dim {
            for j in 0..mv_dim {
                let x = mu.values[i * mv_dim + j];
                let y = mirrored.values[(mu_dim - 1 - i) * mv_dim + j];
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "({i},{j}): {x} vs {y}");
            }
        }
    }

    #[test]
    fn splines_of_degree_p_are_integrated_exactly(
        s in (-1.0f64..1.0, -1.0f64..1.0),
        c in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        // A quadratic is reproduced by the p = 2 quasi-interpolant, so the rule
        // error equals the moment error. Two resolutions must agree.
        let s = [s.0, s.1];
        let f = move |t: [f64; 2]| c[0] + c[1] * t[0] + c[2] * t[1] + c[3] * t[0] * t[0] + c[4] * t[0] * t[1] + c[5] * t[1] * t[1];
        let a = MetricMatrix::identity();
        let coarse = rule(2, 2, 6).integrate_weakly_singular(&IntegrandSampler::new(s, f.clone()), &a, s).unwrap();
        let fine = rule(2, 2, 10).integrate_weakly_singular(&IntegrandSampler::new(s, f), &a, s).unwrap();
        prop_assert!((coarse - fine).abs() < 1e-10 * (1.0 + fine.abs()));
    }

    #[test]
    fn pipelines_agree_on_the_cylinder(s in (-1.0f64..1.0, -1.0f64..1.0), r in 1.0f64..3.0) {
        let s = [s.0, s.1];
        let surf: Arc<dyn Surface> = Arc::new(builtin_surface("cylinder", &[r]).unwrap());
        let rule = rule(2, 3, 10);
        let g = jacobian_sampler(surf.clone(), s);
        let mult = rule.integrate_multiplicative(surf.as_ref(), &g, s).unwrap();
        let sub = rule.integrate_subtractive(surf.as_ref(), &g, s).unwrap();
        prop_assert!((mult - sub).abs() < 1e-4 * sub.abs(), "{mult} vs {sub}");
    }
}

#[test]
fn bezier_segment_blossom_on_the_diagonal() {
    let seg = BezierSegment::new(-1.0, 1.0, vec![1.0, -2.0, 0.5, 3.0]);
    for x in [-1.0, -0.3, 0.4, 1.0] {
        assert!((seg.blossom(&[x, x, x]) - seg.eval(x)).abs() < 1e-14);
    }
}
