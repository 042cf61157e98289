//! The value below the root that the upper constraint forces, obtained as a
//! limit across `y₀`.

use transform_ident::lambda::{coefficients_ab, find_y0, RootSearch, WeightedLambda};
use transform_ident::model::TransformationModel;
use transform_ident::reconstruction::{alpha2_limit, LimitOptions};

fn main() -> transform_ident::Result<()> {
    let model = TransformationModel::registered("M3")?;
    let weight = model.default_weight();
    let coef = coefficients_ab(&model, &weight, 1e-11)?;
    let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
    let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0))?;
    let (y1, y2) = (y0 + 1.0, y0 - 1.0);
    let alpha = coef.location() + 1.0;

    let report = alpha2_limit(&curve, &coef, y0, y1, y2, alpha, &LimitOptions::default(), 1e-11)?;
    // Truth: h = sinh rescaled so that h(y₀) = −A/B and h(y₁) = α.
    let loc = coef.location();
    let scale = (alpha - loc) / (y1.sinh() - y0.sinh());
    let truth = loc + scale * (y2.sinh() - y0.sinh());
    println!(
        "alpha2 = {:.12} after {} halvings (t0 = {:.3})",
        report.alpha2, report.halvings, report.t0
    );
    println!("truth  = {truth:.12}");
    println!("relative change of the last step {:.1e}", report.rel_change);
    Ok(())
}
