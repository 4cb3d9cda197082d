//! Banded quasi-interpolation: stencils, reproduction and convergence.

use sqicube::quasi_interp::{qi_scheme, TruncatedCardinalInverse};
use sqicube::QIOperator;

fn main() -> sqicube::Result<()> {
    for p in 1..=4 {
        println!("p = {p}: interior stencil {:?}", TruncatedCardinalInverse::stencil(p)?);
    }

    let f = |x: f64| (3.0 * x).sin() + x * x;
    for name in ["truncated-cardinal-inverse", "local-interpolation-blossom"] {
        let scheme = qi_scheme(name)?;
        println!("{name}");
        for n in [6, 10, 14, 22] {
            let op = QIOperator::uniform_with_scheme(3, n, scheme)?;
            let q = op.approximate(f)?;
            let err = (0..=400)
                .map(|k| -1.0 + 2.0 * k as f64 / 400.0)
                .map(|x| (q.eval(x).unwrap() - f(x)).abs())
                .fold(0.0, f64::max);
            println!("  N = {n:2}: max error {err:.3e}, |C|_inf = {:.3}", op.max_abs_row_sum());
        }
    }
    Ok(())
}
