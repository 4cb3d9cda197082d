//! A preset experiment: error table, orders and acceptance checks.

use sqicube::experiment::{checks, run, ExperimentConfig, ReferenceStore};

fn main() -> sqicube::Result<()> {
    let example = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let mut cfg = ExperimentConfig::preset(example)?;
    cfg.p = 3;
    let report = run(&cfg, &ReferenceStore::shipped()?)?;
    print!("{}", report.table.to_csv());
    for class in 0..3 {
        if let Some(order) = report.table.overall_order(class) {
            println!("overall order, class {class}: {order:.2}");
        }
    }
    for c in checks(&report) {
        println!("{} {}: {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    Ok(())
}
