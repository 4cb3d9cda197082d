//! Modified moments for sources inside, on the edge of and outside the support.

use sqicube::{modified_moments, BSplineWeight, CubatureRule, MetricMatrix, Rect, SingularQuadConfig};

fn main() -> sqicube::Result<()> {
    let weight = BSplineWeight::uniform([2, 2], Rect::reference())?;
    let cfg = SingularQuadConfig::default();
    // The rule owns the product space of the p = 2, N = 6 quasi-interpolant.
    let space = CubatureRule::new(weight, 2, 6, cfg.clone())?.space().clone();
    let a = MetricMatrix::new(1.0, 0.2, 2.0)?;
    for s in [[0.0, 0.0], [1.0, 0.3], [1.2, -1.2]] {
        let mu = modified_moments(&space, &a, s, &cfg)?;
        let total: f64 = mu.values.iter().sum();
        let largest = mu.values.iter().cloned().fold(0.0, f64::max);
        println!(
            "s = {s:?}: {} moments, sum {total:.12}, largest {largest:.6}, accuracy estimate {:.1e}",
            mu.values.len(),
            mu.accuracy_estimate
        );
    }
    Ok(())
}
