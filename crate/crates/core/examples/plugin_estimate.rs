//! Kernel plug-in estimate of `λ` and `h` from a simulated sample, scored
//! against the truth.

use transform_ident::estimator::{plugin_reconstruct, trimmed_weight, PluginOptions};
use transform_ident::model::{CovariateLaw, TransformationModel};
use transform_ident::montecarlo::{normalized_truth, score, Metric};

fn main() -> transform_ident::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8000);
    let model = TransformationModel::registered("M1")?;
    let samples = model.simulate(n, 3, &CovariateLaw::on_weight(&model.default_weight()))?;
    let opts = PluginOptions::default();
    let fit = plugin_reconstruct(&samples, &opts)?;

    let k = &fit.kernel;
    println!("n = {n}, bandwidths x {:?}, y {:.4}", k.bandwidth_x, k.bandwidth_y);
    let b = fit.lambda.coefficients().b;
    println!("y0 = {:.4} (truth -0.5), B = {b:.4} (truth 1)", fit.lambda.field.y0);

    let weight = trimmed_weight(&samples, opts.weight_quantiles, opts.coord)?;
    let truth = normalized_truth(&model, &fit.transform, &weight)?;
    let t = &fit.transform;
    for k in (0..t.grid.len()).step_by(20) {
        println!("{:>8.4} {:>10.5} {:>10.5}", t.grid[k], t.values[k], truth(t.grid[k]));
    }
    println!("sup error {:.4}", score(&model, t, &weight, Metric::Sup)?);
    Ok(())
}
