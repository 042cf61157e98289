use proptest::prelude::*;
use transform_ident::lambda::{CoefficientPair, FnCurve};
use transform_ident::numeric::linspace;
use transform_ident::ode::{GronwallVerdict, RandomGronwall};
use transform_ident::reconstruction::{reconstruct_global, ConstraintSet, ReconstructionOptions, Reconstructor};

fn slope() -> impl Strategy<Value = f64> {
    prop_oneof![0.3f64..3.0, -3.0f64..-0.3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // With h = id the identifying equation gives λ = −(A + B y) and y₀ = −A/B.
    #[test]
    fn affine_lambda_reconstructs_identity(a in -2.0f64..2.0, b in slope(), d in 0.2f64..1.5) {
        let coef = CoefficientPair { a, b };
        let y0 = -a / b;
        let curve = FnCurve(move |y: f64| -(a + b * y));
        let c = ConstraintSet::Canonical { y1: y0 + d, alpha: y0 + d };
        let grid = linspace(y0 - 2.0, y0 + 2.0, 81);
        let t = reconstruct_global(&curve, coef, y0, c, &grid, ReconstructionOptions::default()).unwrap();
        prop_assert!(t.sup_error(|y| y) < 1e-7, "{}", t.sup_error(|y| y));
        prop_assert!((t.alpha2 - (y0 - d)).abs() < 1e-7);
    }

    #[test]
    fn two_point_remap_hits_its_constraints(
        b in slope(),
        ya in -1.8f64..-0.2,
        yb in 0.2f64..1.8,
        alpha_a in -5.0f64..5.0,
        gap in 0.1f64..10.0,
    ) {
        let coef = CoefficientPair { a: 0.0, b };
        let curve = FnCurve(move |y: f64| -b * y.sinh() / y.cosh());
        let c = ConstraintSet::Canonical { y1: 1.0, alpha: 1.0 };
        let r = Reconstructor::new(&curve, coef, 0.0, c, (-2.0, 2.0), ReconstructionOptions::default()).unwrap();
        let target = ConstraintSet::TwoPoint { ya, yb, alpha_a, alpha_b: alpha_a + gap };
        let base = r.eval_many(&[ya, yb]).unwrap();
        let mapped = r.remap(&base, &target).unwrap();
        prop_assert!((mapped[0] - alpha_a).abs() < 1e-9 * (1.0 + alpha_a.abs()));
        prop_assert!((mapped[1] - alpha_a - gap).abs() < 1e-9 * (1.0 + (alpha_a + gap).abs()));
    }

    #[test]
    fn random_gronwall_instances_hold(seed in any::<u64>()) {
        let out = RandomGronwall::generate(seed, 128).check().unwrap();
        prop_assert_eq!(out.verdict, GronwallVerdict::HypothesisHoldsAndConclusionHolds);
    }

    // Relabelling Y by an increasing affine map relabels λ and y₀ but
    // leaves the normalized reconstruction unchanged.
    #[test]
    fn affine_relabelling_of_y_is_invisible(shift in -1.0f64..1.0, scale in 0.5f64..2.0) {
        let coef = CoefficientPair { a: 0.5, b: 1.0 };
        let base = FnCurve(|y: f64| -(0.5 + y.sinh()) / y.cosh());
        let moved = FnCurve(move |z: f64| {
            let y = (z - shift) / scale;
            scale * (-(0.5 + y.sinh()) / y.cosh())
        });
        let y0 = (-0.5f64).asinh();
        let z0 = shift + scale * y0;
        let ys = linspace(y0 - 1.0, y0 + 1.0, 41);
        let zs: Vec<f64> = ys.iter().map(|y| shift + scale * y).collect();
        let opts = ReconstructionOptions::default();
        let c = ConstraintSet::Canonical { y1: y0 + 0.8, alpha: 1.0 };
        let h = reconstruct_global(&base, coef, y0, c, &ys, opts).unwrap();
        let c = ConstraintSet::Canonical { y1: z0 + 0.8 * scale, alpha: 1.0 };
        let k = reconstruct_global(&moved, coef, z0, c, &zs, opts).unwrap();
        for ((u, v), i) in h.values.iter().zip(&k.values).zip(&h.interpolated) {
            if !*i {
                prop_assert!((u - v).abs() < 1e-7, "{u} vs {v}");
            }
        }
    }
}
