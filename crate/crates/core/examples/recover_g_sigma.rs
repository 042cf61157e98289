//! `g` and `σ` recovered from a reconstructed `h`, once against the exact
//! error law and once by kernel regression on a sample.

use transform_ident::estimator::{recover_g_sigma_samples, KernelConfig};
use transform_ident::lambda::{coefficients_ab, find_y0, RootSearch, WeightedLambda};
use transform_ident::model::{CovariateLaw, TransformationModel};
use transform_ident::reconstruction::{recover_g_sigma_oracle, ConstraintSet, ReconstructionOptions, Reconstructor};

fn main() -> transform_ident::Result<()> {
    let model = TransformationModel::registered("M3")?;
    let weight = model.default_weight();
    let coef = coefficients_ab(&model, &weight, 1e-11)?;
    let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
    let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0))?;
    // Normalized so that the reconstruction is exactly sinh: h(y₀) = sinh(y₀), h(1) = sinh(1).
    let c = ConstraintSet::Canonical {
        y1: 1.0,
        alpha: 1f64.sinh(),
    };
    let r = Reconstructor::new(&curve, coef, y0, c, (-6.0, 6.0), ReconstructionOptions::default())?;

    let samples = model.simulate(8000, 5, &CovariateLaw::on_weight(&weight))?;
    let kernel = KernelConfig::rule_of_thumb(&samples, 1.0, 1.0)?;
    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "x", "g", "g exact", "g kernel", "sigma", "s exact", "s kernel"
    );
    for x in [0.2, 0.5, 0.8] {
        let (g, s) = recover_g_sigma_oracle(|y| r.eval(y), &model, &[x])?;
        let (gk, sk) = recover_g_sigma_samples(|y| Ok(y.sinh()), &samples, &kernel, &[x])?;
        println!(
            "{x:>5.2} {x:>9.4} {g:>9.4} {gk:>9.4} {:>9.4} {s:>9.4} {sk:>9.4}",
            x.exp()
        );
    }
    Ok(())
}
