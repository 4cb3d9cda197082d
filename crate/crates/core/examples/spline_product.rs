//! Exact products of a quasi-interpolant with the B-spline weight.

use sqicube::quasi_interp::apply_qi_tensor;
use sqicube::spline_product::multiply_tensor;
use sqicube::{BSplineWeight, QIOperator, Rect, SampleGrid2D};

fn main() -> sqicube::Result<()> {
    let weight = BSplineWeight::uniform([2, 2], Rect::reference())?;
    let op = QIOperator::uniform(3, 8)?;
    let grid = SampleGrid2D::sample(&op, &op, |t| (t[0] * t[1]).exp());
    let sigma = apply_qi_tensor(&op, &op, &grid)?;
    let product = multiply_tensor(&sigma, &weight)?;
    println!(
        "product space: degree {:?}, {} basis functions",
        product.space.degree(),
        product.space.dim()
    );
    for t in [[0.0, 0.0], [0.3, -0.7], [0.9, 0.9]] {
        let exact = sigma.eval(t)? * weight.eval(t);
        println!("t = {t:?}: product {:.15}, sigma * B {exact:.15}", product.eval(t)?);
    }
    Ok(())
}
