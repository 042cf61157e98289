//! One solution, three normalizations. Each direct solve agrees with the
//! affine remap of the canonical one.

use transform_ident::lambda::{coefficients_ab, find_y0, RootSearch, WeightedLambda};
use transform_ident::model::TransformationModel;
use transform_ident::numeric::linspace;
use transform_ident::reconstruction::{
    reconstruct_global, remap_constraints, ConstraintSet, ReconstructionOptions, Reconstructor,
};

fn main() -> transform_ident::Result<()> {
    let model = TransformationModel::registered("M6")?;
    let weight = model.default_weight();
    let coef = coefficients_ab(&model, &weight, 1e-11)?;
    let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
    let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0))?;
    let span = (y0 - 1.5, y0 + 1.5);
    let grid = linspace(span.0, span.1, 301);
    let opts = ReconstructionOptions::default();

    let canonical = ConstraintSet::Canonical {
        y1: y0 + 1.0,
        alpha: coef.location() + 1.0,
    };
    let base = Reconstructor::new(&curve, coef, y0, canonical, span, opts)?;
    let values = base.tabulate(&grid)?.values;

    let targets = [
        ConstraintSet::TwoPoint {
            ya: y0 - 1.0,
            yb: y0 + 1.0,
            alpha_a: -1.0,
            alpha_b: 1.0,
        },
        ConstraintSet::PointSlope {
            ya: y0 + 0.5,
            alpha_a: 0.0,
            slope: 1.0,
        },
    ];
    for target in targets {
        let mapped = remap_constraints(&base, &values, &target)?;
        let direct = reconstruct_global(&curve, coef, y0, target, &grid, opts)?;
        let gap = mapped
            .iter()
            .zip(&direct.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("{target:?}\n  remap vs direct: {gap:.2e}");
    }
    Ok(())
}
