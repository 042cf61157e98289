//! Using `1.5 B` inside the closed form: the residuals of the identifying
//! equation blow up and `h` loses its slope at `y₀`.

use transform_ident::lambda::{coefficients_ab, find_y0, RootSearch, WeightedLambda};
use transform_ident::model::TransformationModel;
use transform_ident::numeric::linspace;
use transform_ident::reconstruction::{reconstruct_global, ConstraintSet, ReconstructionOptions, Reconstructor};

fn main() -> transform_ident::Result<()> {
    let model = TransformationModel::registered("M1")?;
    let weight = model.default_weight();
    let coef = coefficients_ab(&model, &weight, 1e-11)?;
    let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
    let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0))?;
    let c = ConstraintSet::Canonical {
        y1: y0 + 1.0,
        alpha: coef.location() + 1.0,
    };
    let grid = linspace(y0 - 1.5, y0 + 1.5, 401);

    for exponent in [coef.b, 1.5 * coef.b] {
        let opts = ReconstructionOptions {
            exponent: Some(exponent),
            ..Default::default()
        };
        let t = reconstruct_global(&curve, coef, y0, c, &grid, opts)?;
        let r = Reconstructor::new(&curve, coef, y0, c, (grid[0], grid[400]), opts)?;
        let base = -coef.a / exponent;
        print!(
            "exponent {exponent:.2}: residual {:.2e}, quotients",
            t.max_residual_ratio()
        );
        for s in [1e-2, 1e-3, 1e-4] {
            print!(" {:.4e}", (r.eval(y0 + s)? - base) / s);
        }
        println!();
    }
    Ok(())
}
