//! `A`, `B`, the root `y₀` and the slope law `B = −λ'(y₀)` for every
//! registered model.

use transform_ident::lambda::{coefficient_integrals, find_y0, recover_b, RootSearch, WeightedLambda};
use transform_ident::model::TransformationModel;

fn main() -> transform_ident::Result<()> {
    println!("{:<4} {:>10} {:>10} {:>10} {:>12}", "", "A", "B", "y0", "-lambda'(y0)");
    for name in TransformationModel::registered_names() {
        let model = TransformationModel::registered(name)?;
        let weight = model.default_weight();
        let coef = coefficient_integrals(&model, &weight, 1e-11)?;
        let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
        match find_y0(&curve, &RootSearch::new(-3.0, 3.0)) {
            Ok(y0) => {
                let b = recover_b(&curve, y0, 0.05)?;
                println!(
                    "{name:<4} {:>10.6} {:>10.6} {y0:>10.6} {:>12.6}",
                    coef.a, coef.b, b.value
                );
            }
            // B = 0: λ = −A/h' keeps one sign and has no root.
            Err(e) => println!("{name:<4} {:>10.6} {:>10.6}  no root ({e})", coef.a, coef.b),
        }
    }
    Ok(())
}
