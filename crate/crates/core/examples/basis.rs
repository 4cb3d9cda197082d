//! Knot vectors, basis functions and Bézier extraction.

use sqicube::{KnotVector, Spline1D};

fn main() -> sqicube::Result<()> {
    let kv = KnotVector::clamped(2, &[-1.0, -0.5, 0.0, 0.5, 1.0])?;
    println!("knots {kv}, dimension {}", kv.dim());
    println!("greville {:?}", kv.greville());

    let (span, values) = kv.eval_nonzero_basis(0.2)?;
    println!("t = 0.2: span {span}, nonzero values {values:?} (sum {})", values.iter().sum::<f64>());

    let spline = Spline1D::new(kv, vec![1.0, 0.0, 2.0, -1.0, 0.5, 1.0])?;
    for seg in spline.bezier_extract() {
        println!("[{:5.2}, {:5.2}] bernstein {:?}", seg.a, seg.b, seg.coeffs);
    }
    Ok(())
}
