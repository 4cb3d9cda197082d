//! The adaptive reference integrator on its own.

use sqicube::oracle::{oracle_integrate, OracleKernel, OracleRequest};
use sqicube::{MetricMatrix, Rect};

fn main() -> sqicube::Result<()> {
    // ∫∫_{[-1,1]²} 1/|t| dt = 8 ln(1 + √2).
    let closed = 8.0 * (1.0 + 2f64.sqrt()).ln();
    let req = OracleRequest::scalar(|_| 1.0, Rect::reference())
        .with_kernel(OracleKernel::Metric(MetricMatrix::identity()), [0.0, 0.0]);
    let res = oracle_integrate(&req)?;
    println!(
        "value {:.15}, closed form {closed:.15}, estimate {:.1e}, cells {}",
        res.value(),
        res.error_estimate(),
        res.cells
    );

    // Jittered splits give an independent second opinion.
    let jittered = oracle_integrate(&req.clone().with_seed(7))?;
    println!("jittered {:.15}", jittered.value());
    Ok(())
}
