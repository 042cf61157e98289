//! Sign-change test on `λ̃`, first on the exact conditional CDF, then on
//! simulated samples.

use transform_ident::estimator::{sample_diagnostic, PluginOptions};
use transform_ident::lambda::{homoscedasticity_diagnostic, tabulate_lambda_tilde};
use transform_ident::model::{CovariateLaw, TransformationModel};
use transform_ident::numeric::linspace;

fn main() -> transform_ident::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8000);
    let ys = linspace(-2.0, 2.0, 41);
    let opts = PluginOptions::default();
    for name in ["M1", "M2", "M5"] {
        let model = TransformationModel::registered(name)?;
        let weight = model.default_weight();
        let rows = tabulate_lambda_tilde(&model, &weight.probe_points(5), &ys, 0)?;
        let exact = homoscedasticity_diagnostic(&rows)?;
        let samples = model.simulate(n, 1, &CovariateLaw::on_weight(&weight))?;
        let est = sample_diagnostic(&samples, &opts)?;
        println!(
            "{name}: exact {} ({} sign-changing rows), n = {n}: {} ({} of {} points significant)",
            exact.verdict, exact.sign_changing_rows, est.verdict, est.significant_points, est.total_points
        );
    }
    Ok(())
}
