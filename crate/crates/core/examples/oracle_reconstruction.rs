//! Rebuild `h` from the exact `λ` of a registered model and compare it with
//! the truth under the same normalization.
//!
//! ```text
//! cargo run --example oracle_reconstruction -- M3
//! ```

use transform_ident::lambda::{coefficients_ab, find_y0, RootSearch, WeightedLambda};
use transform_ident::model::TransformationModel;
use transform_ident::numeric::linspace;
use transform_ident::reconstruction::{reconstruct_global, ConstraintSet, ReconstructionOptions};
use transform_ident::run::normalized_true_h;

fn main() -> transform_ident::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "M1".into());
    let model = TransformationModel::registered(&name)?;
    let weight = model.default_weight();
    let coef = coefficients_ab(&model, &weight, 1e-11)?;
    let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
    let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0))?;

    let constraints = ConstraintSet::Canonical {
        y1: y0 + 1.0,
        alpha: coef.location() + 1.0,
    };
    let grid = linspace(y0 - 1.5, y0 + 1.5, 401);
    let t = reconstruct_global(&curve, coef, y0, constraints, &grid, ReconstructionOptions::default())?;
    let truth = normalized_true_h(&model, &t);

    println!("{name}: A = {:.6}, B = {:.6}, y0 = {y0:.6}", coef.a, coef.b);
    println!("{:>10} {:>14} {:>14}", "y", "h", "truth");
    for k in (0..grid.len()).step_by(50) {
        println!("{:>10.4} {:>14.8} {:>14.8}", grid[k], t.values[k], truth(grid[k]));
    }
    println!("sup error outside the band: {:.2e}", t.sup_error(truth));
    println!("largest relative residual: {:.2e}", t.max_residual_ratio());
    Ok(())
}
