//! Convergence of the plug-in estimate over growing sample sizes.
//!
//! ```text
//! cargo run --release --example monte_carlo -- 50
//! ```

use transform_ident::estimator::PluginOptions;
use transform_ident::model::TransformationModel;
use transform_ident::montecarlo::{run, Metric, MonteCarloPlan};

fn main() -> transform_ident::Result<()> {
    let replications = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let plan = MonteCarloPlan {
        model: TransformationModel::registered("M1")?,
        sizes: vec![500, 2000, 8000],
        replications,
        seed_base: 0,
        metric: Metric::Sup,
        plugin: PluginOptions::default(),
    };
    let report = run(&plan)?;
    report.write_summary(std::io::stdout().lock())?;
    println!("medians strictly decreasing: {}", report.converging());
    Ok(())
}
