//! Singularity extraction pipelines on curved surfaces.

use std::sync::Arc;

use sqicube::cubature::{graded_cells, jacobian_sampler, regular_integral, CubatureRule};
use sqicube::geometry::{builtin_surface, first_fundamental_form, kernel_g, Surface};
use sqicube::oracle::{oracle_integrate, OracleKernel, OracleRequest};
use sqicube::{BSplineWeight, Rect, SingularQuadConfig};

fn setup(surface: &str) -> (Arc<dyn Surface>, CubatureRule) {
    let surf: Arc<dyn Surface> = Arc::new(builtin_surface(surface, &[]).unwrap());
    let weight = BSplineWeight::uniform([2, 2], Rect::reference()).unwrap();
    let rule = CubatureRule::new(weight, 3, 10, SingularQuadConfig::default()).unwrap();
    (surf, rule)
}

#[test]
fn remainder_matches_the_oracle() {
    let (surf, rule) = setup("hyperboloid");
    let weight = rule.weight().clone();
    for s in [[0.0, 0.0], [0.5, -0.5], [1.0, 0.5], [-1.0, -1.0]] {
        let g = jacobian_sampler(surf.clone(), s);
        let ours = rule.subtractive_remainder(surf.as_ref(), &g, s).unwrap();

        let a = first_fundamental_form(surf.as_ref(), s).unwrap();
        let (x, w, gg) = (surf.clone(), weight.clone(), g.clone());
        let integrand = move |t: [f64; 2]| {
            let q = a.form([t[0] - s[0], t[1] - s[1]]);
            if q == 0.0 {
                return 0.0;
            }
            (kernel_g(x.as_ref(), s, t).unwrap() - 1.0 / q.sqrt()) * w.eval(t) * gg.eval(t)
        };
        let req = OracleRequest::scalar(integrand, Rect::reference())
            .with_singular_point(s)
            .with_breaks(weight.knots_u().to_vec(), weight.knots_v().to_vec())
            .with_target(1e-12);
        let oracle = oracle_integrate(&req).unwrap().value();
        assert!((ours - oracle).abs() <= 1e-10, "s={s:?}: {ours} vs {oracle}");
    }
}

#[test]
fn regular_integrals_are_stable_under_refinement() {
    let (surf, rule) = setup("hyperboloid");
    let s = [0.5, 0.0];
    let a = first_fundamental_form(surf.as_ref(), s).unwrap();
    let w = rule.weight().clone();
    let x = surf.clone();
    let f = move |t: [f64; 2]| {
        let q = a.form([t[0] - s[0], t[1] - s[1]]);
        if q == 0.0 {
            return 0.0;
        }
        (kernel_g(x.as_ref(), s, t).unwrap() - 1.0 / q.sqrt()) * w.eval(t)
    };
    let cells = graded_cells(&rule.weight().support(), rule.weight().knots_u(), rule.weight().knots_v(), s, 1e-12);
    let base = regular_integral(&f, &cells, 16).unwrap();
    let doubled = regular_integral(&f, &cells, 32).unwrap();
    assert!((base - doubled).abs() <= 1e-12 * base.abs().max(1.0), "{base} vs {doubled}");
}

#[test]
fn pipelines_converge_to_the_surface_oracle() {
    let (surf, _) = setup("hyperboloid");
    let weight = BSplineWeight::uniform([2, 2], Rect::reference()).unwrap();
    let rules: Vec<CubatureRule> = [6, 14]
        .iter()
        .map(|&n| CubatureRule::new(weight.clone(), 3, n, SingularQuadConfig::default()).unwrap())
        .collect();
    for s in [[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]] {
        let g = jacobian_sampler(surf.clone(), s);
        let (w, gg) = (weight.clone(), g.clone());
        let req = OracleRequest::scalar(move |t| w.eval(t) * gg.eval(t), Rect::reference())
            .with_kernel(OracleKernel::Surface(surf.clone()), s)
            .with_breaks(weight.knots_u().to_vec(), weight.knots_v().to_vec());
        let exact = oracle_integrate(&req).unwrap().value();
        let errors: Vec<[f64; 2]> = rules
            .iter()
            .map(|r| {
                let mult = r.integrate_multiplicative(surf.as_ref(), &g, s).unwrap();
                let sub = r.integrate_subtractive(surf.as_ref(), &g, s).unwrap();
                [(mult - exact).abs(), (sub - exact).abs()]
            })
            .collect();
        for k in 0..2 {
            assert!(errors[1][k] < 1e-3 * exact, "s={s:?}: {errors:?}");
            assert!(errors[1][k] < 0.5 * errors[0][k], "s={s:?}: {errors:?}");
        }
    }
}
