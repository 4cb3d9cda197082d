//! The weakly singular rule against the adaptive oracle for a smooth factor.

use sqicube::oracle::{oracle_integrate, OracleKernel, OracleRequest};
use sqicube::{BSplineWeight, CubatureRule, IntegrandSampler, MetricMatrix, Rect, SingularQuadConfig};

fn main() -> sqicube::Result<()> {
    let weight = BSplineWeight::uniform([2, 2], Rect::reference())?;
    let a = MetricMatrix::identity();
    let f = |t: [f64; 2]| (t[0] * t[1]).exp();
    let s = [0.5, -1.0];

    let w = weight.clone();
    let req = OracleRequest::scalar(move |t| w.eval(t) * f(t), Rect::reference())
        .with_kernel(OracleKernel::Metric(a), s)
        .with_breaks(weight.knots_u().to_vec(), weight.knots_v().to_vec());
    let exact = oracle_integrate(&req)?.value();
    println!("oracle {exact:.15}");

    for n in [6, 8, 10, 12, 14] {
        let rule = CubatureRule::new(weight.clone(), 3, n, SingularQuadConfig::default())?;
        let value = rule.integrate_weakly_singular(&IntegrandSampler::new(s, f), &a, s)?;
        println!("N = {n:2}: {value:.15}  error {:.3e}", (value - exact).abs());
    }
    Ok(())
}
