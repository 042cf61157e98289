//! Seeded random instances of the integral Gronwall inequality.

use transform_ident::ode::{gronwall_suite, RandomGronwall};

fn main() -> transform_ident::Result<()> {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let report = gronwall_suite(count, 0, 256)?;
    println!(
        "{} instances: {} hold, {} hypothesis failures, {} violations, worst excess {:.3e}",
        report.instances, report.holds, report.hypothesis_fails, report.violations, report.worst_excess
    );

    let one = RandomGronwall::generate(42, 256);
    println!("seed 42 on [{:.3}, {:.3}]: {:?}", one.a, one.b, one.check()?);
    Ok(())
}
