//! Closed form against a Runge–Kutta solution of `h' = −(A + Bh)/λ`, plus
//! the uniqueness probe on the same problem.

use transform_ident::lambda::{coefficients_ab, find_y0, CoefficientPair, RootSearch, WeightedLambda};
use transform_ident::model::TransformationModel;
use transform_ident::ode::{identifying_ivp, integrate_ivp, uniqueness_probe};
use transform_ident::reconstruction::{ConstraintSet, ReconstructionOptions, Reconstructor};

fn main() -> transform_ident::Result<()> {
    let model = TransformationModel::registered("M1")?;
    let weight = model.default_weight();
    let b = coefficients_ab(&model, &weight, 1e-11)?.b;
    let curve = WeightedLambda::new(&model, &weight, 1e-11)?;
    let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0))?;

    // With A = 0 the solution is positive above y₀, as the IVP requires.
    let coef = CoefficientPair { a: 0.0, b };
    let c = ConstraintSet::Canonical {
        y1: y0 + 1.0,
        alpha: 1.0,
    };
    let closed = Reconstructor::new(
        &curve,
        coef,
        y0,
        c,
        (y0 - 1.5, y0 + 1.5),
        ReconstructionOptions::default(),
    )?;

    let (a, end) = (y0 + 0.075, y0 + 1.5);
    let spec = identifying_ivp(&curve, coef, y0, a, end, closed.eval(a)?)?;
    let sol = integrate_ivp(&spec, 2000)?;
    let exact = closed.eval_many(&sol.grid)?;
    let err = sol
        .values
        .iter()
        .zip(&exact)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    println!("RK4 vs closed form on [{a:.3}, {end:.3}]: {err:.2e}");

    let u = uniqueness_probe(&spec, 2000)?;
    println!(
        "uniqueness: refinement {:.2e}, restart {:.2e}, consistent {}",
        u.refinement, u.restart, u.consistent
    );
    Ok(())
}
