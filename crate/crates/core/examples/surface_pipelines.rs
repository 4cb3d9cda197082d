//! Multiplicative and subtractive extraction of the surface kernel.

use std::sync::Arc;

use sqicube::cubature::jacobian_sampler;
use sqicube::geometry::{builtin_surface, rho, Surface};
use sqicube::oracle::{oracle_integrate, OracleKernel, OracleRequest};
use sqicube::{BSplineWeight, CubatureRule, Rect, SingularQuadConfig};

fn main() -> sqicube::Result<()> {
    let surf: Arc<dyn Surface> = Arc::new(builtin_surface("hyperboloid", &[])?);
    let weight = BSplineWeight::uniform([2, 2], Rect::reference())?;
    let s = [0.5, 0.5];
    println!("rho near s: {:.8}", rho(surf.as_ref(), s, [0.5001, 0.5001])?);

    let g = jacobian_sampler(surf.clone(), s);
    let (w, gg) = (weight.clone(), g.clone());
    let req = OracleRequest::scalar(move |t| w.eval(t) * gg.eval(t), Rect::reference())
        .with_kernel(OracleKernel::Surface(surf.clone()), s)
        .with_breaks(weight.knots_u().to_vec(), weight.knots_v().to_vec());
    let exact = oracle_integrate(&req)?.value();
    println!("oracle {exact:.12}");

    for n in [6, 10, 14] {
        let rule = CubatureRule::new(weight.clone(), 3, n, SingularQuadConfig::default())?;
        let mult = rule.integrate_multiplicative(surf.as_ref(), &g, s)?;
        let sub = rule.integrate_subtractive(surf.as_ref(), &g, s)?;
        println!(
            "N = {n:2}: multiplicative error {:.3e}, subtractive error {:.3e}",
            (mult - exact).abs(),
            (sub - exact).abs()
        );
    }
    Ok(())
}
