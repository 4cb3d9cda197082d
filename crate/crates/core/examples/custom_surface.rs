//! A user-supplied surface with finite-difference partials.

use std::sync::Arc;

use sqicube::cubature::jacobian_sampler;
use sqicube::geometry::{first_fundamental_form, partials_consistency, FnSurface, Surface};
use sqicube::{BSplineWeight, CubatureRule, Rect, SingularQuadConfig};

fn main() -> sqicube::Result<()> {
    // A gently curved paraboloid patch.
    let surf: Arc<dyn Surface> = Arc::new(FnSurface::new("paraboloid", Rect::reference(), |t: [f64; 2]| {
        [t[0], t[1], 0.2 * (t[0] * t[0] + t[1] * t[1])]
    }));
    let s = [0.25, 0.0];
    let a = first_fundamental_form(surf.as_ref(), s)?;
    println!("A(s) = {:?}, det {:.6}", a.entries(), a.det());
    println!("partials consistency {:.2e}", partials_consistency(surf.as_ref(), s, 1e-4));

    let weight = BSplineWeight::uniform([2, 2], Rect::reference())?;
    let g = jacobian_sampler(surf.clone(), s);
    for n in [6, 10, 14] {
        let rule = CubatureRule::new(weight.clone(), 2, n, SingularQuadConfig::default())?;
        println!("N = {n:2}: {:.12}", rule.integrate_subtractive(surf.as_ref(), &g, s)?);
    }
    Ok(())
}
