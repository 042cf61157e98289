//! The ratio field `λ̃(y|x) = (∂F/∂xᵢ)/(∂F/∂y)`, its weighted average `λ(y)`,
//! the root `y₀`, the coefficients `A`, `B`, and the homoscedasticity check.
//!
//! For a transformation model `λ(y) = −(A + B·h(y))/h'(y)`. Because
//! `A + B·h(y₀) = 0`, differentiating at the root gives `λ'(y₀) = −B`: the
//! `h''` term is multiplied by `A + B·h` and drops out. [`recover_b`] uses
//! that slope law, so `B` is obtained from `λ` alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConditionalCdf, TransformationModel};
use crate::numeric::interp::NaturalSpline;
use crate::numeric::quadrature::QuadOptions;
use crate::numeric::roots::{bracketed_root, median_crossing, sign_changes, RootOptions};
use crate::numeric::{linspace, richardson_derivative, Derivative};
use crate::sample::fmt_f64;
use crate::weight::WeightFunction;

/// Smallest `∂F/∂y` accepted as a positive density.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// `|B|` below this is treated as zero.
pub const B_FLOOR: f64 = 1e-8;
/// Diagnostic threshold in units of the per-point error estimate.
pub const NOISE_MULTIPLIER: f64 = 3.0;

/// `λ̃ = dF_dxi / dF_dy`, refusing a vanishing density.
pub fn lambda_tilde(df_dxi: f64, df_dy: f64) -> Result<f64> {
    if !(df_dy > DENSITY_FLOOR) {
        return Err(Error::DegenerateDensity {
            value: df_dy,
            floor: DENSITY_FLOOR,
        });
    }
    let v = df_dxi / df_dy;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("lambda-tilde from ({df_dxi:e}, {df_dy:e})")));
    }
    Ok(v)
}

/// `λ̃(y|x)` from any conditional-CDF source.
pub fn lambda_tilde_at<S: ConditionalCdf + ?Sized>(source: &S, y: f64, x: &[f64], coord: usize) -> Result<f64> {
    let (dy, dx) = source.partials(y, x, coord)?;
    lambda_tilde(dx, dy)
}

/// A scalar curve `y ↦ λ(y)`.
pub trait LambdaCurve: Sync {
    fn eval(&self, y: f64) -> Result<f64>;

    /// Interval on which the curve may be queried.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Wraps a closure as a curve (analytic fixtures).
pub struct FnCurve<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> LambdaCurve for FnCurve<F> {
    fn eval(&self, y: f64) -> Result<f64> {
        Ok((self.0)(y))
    }
}

impl<C: LambdaCurve + ?Sized> LambdaCurve for &C {
    fn eval(&self, y: f64) -> Result<f64> {
        (**self).eval(y)
    }

    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

/// `λ(y) = ∫ v(x) λ̃(y|x) dx`, evaluated by quadrature on demand.
pub struct WeightedLambda<'a, S: ?Sized> {
    source: &'a S,
    weight: &'a WeightFunction,
    opts: QuadOptions,
    mc_samples: usize,
}

impl<'a, S: ConditionalCdf + ?Sized> WeightedLambda<'a, S> {
    pub fn new(source: &'a S, weight: &'a WeightFunction, quad_tol: f64) -> Result<Self> {
        if source.dim() != weight.dim() {
            return Err(Error::Invalid(format!(
                "weight has {} coordinate(s), source has {}",
                weight.dim(),
                source.dim()
            )));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::Invalid("quadrature tolerance must be positive".into()));
        }
        Ok(Self {
            source,
            weight,
            opts: QuadOptions {
                abs_tol: quad_tol,
                rel_tol: 0.0,
                max_panels: 2000,
            },
            mc_samples: 20_000,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.opts.abs_tol
    }

    /// Value together with the quadrature error estimate.
    pub fn integrate(&self, y: f64) -> Result<(f64, f64)> {
        let coord = self.weight.coord();
        let r = self.weight.integrate(
            |x| lambda_tilde_at(self.source, y, x, coord),
            &self.opts,
            self.mc_samples,
        )?;
        Ok((r.value, r.error))
    }
}

impl<S: ConditionalCdf + ?Sized> LambdaCurve for WeightedLambda<'_, S> {
    fn eval(&self, y: f64) -> Result<f64> {
        Ok(self.integrate(y)?.0)
    }
}

/// `λ(y)` for one `y` with absolute tolerance `quad_tol`.
pub fn integrate_lambda<S: ConditionalCdf + ?Sized>(
    source: &S,
    weight: &WeightFunction,
    y: f64,
    quad_tol: f64,
) -> Result<f64> {
    WeightedLambda::new(source, weight, quad_tol)?.eval(y)
}

/// `λ` tabulated on a grid and interpolated by a natural cubic spline.
///
/// Queries outside the tabulated range are rejected.
#[derive(Debug, Clone)]
pub struct TabulatedLambda {
    spline: NaturalSpline,
}

impl TabulatedLambda {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            spline: NaturalSpline::new(grid, values)?,
        })
    }

    pub fn grid(&self) -> &[f64] {
        self.spline.knots()
    }

    pub fn values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.spline.eval_with_derivative(y).1
    }
}

impl LambdaCurve for TabulatedLambda {
    fn eval(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.spline.domain();
        if !(y >= lo && y <= hi) {
            return Err(Error::Domain(format!(
                "lambda is tabulated on [{lo}, {hi}] only; queried at {y}"
            )));
        }
        Ok(self.spline.eval(y))
    }

    fn domain(&self) -> (f64, f64) {
        self.spline.domain()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPair {
    pub a: f64,
    pub b: f64,
}

impl CoefficientPair {
    /// The value `h(y₀) = −A/B`.
    pub fn location(&self) -> f64 {
        -self.a / self.b
    }
}

/// `A = ∫ v (σ ∂g − g ∂σ)/σ` and `B = ∫ v ∂σ/σ`, without the `B ≠ 0` check.
pub fn coefficient_integrals(
    model: &TransformationModel,
    weight: &WeightFunction,
    quad_tol: f64,
) -> Result<CoefficientPair> {
    if weight.dim() != model.dim() {
        return Err(Error::Invalid("weight and model dimensions differ".into()));
    }
    let coord = weight.coord();
    let opts = QuadOptions {
        abs_tol: quad_tol,
        rel_tol: 0.0,
        max_panels: 2000,
    };
    let a = weight.integrate(
        |x| {
            let s = model.sigma.eval(x);
            if !(s > 0.0) {
                return Err(Error::Domain(format!("sigma(x) = {s} at {x:?}")));
            }
            Ok((s * model.g.partial(x, coord) - model.g.eval(x) * model.sigma.partial(x, coord)) / s)
        },
        &opts,
        20_000,
    )?;
    let b = weight.integrate(
        |x| Ok(model.sigma.partial(x, coord) / model.sigma.eval(x)),
        &opts,
        20_000,
    )?;
    Ok(CoefficientPair { a: a.value, b: b.value })
}

/// [`coefficient_integrals`] plus the heteroscedasticity requirement.
pub fn coefficients_ab(model: &TransformationModel, weight: &WeightFunction, quad_tol: f64) -> Result<CoefficientPair> {
    let pair = coefficient_integrals(model, weight, quad_tol)?;
    if !(pair.b.abs() >= B_FLOOR) {
        return Err(Error::Homoscedastic {
            b: pair.b,
            floor: B_FLOOR,
        });
    }
    Ok(pair)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSearch {
    pub lower: f64,
    pub upper: f64,
    /// Points of the coarse sign scan.
    pub scan_points: usize,
    pub root: RootOptions,
}

impl RootSearch {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            scan_points: 129,
            root: RootOptions {
                x_tol: 1e-14,
                max_iter: 300,
            },
        }
    }
}

/// Locates `y₀` with `λ(y₀) = 0`.
///
/// The interval is scanned on a uniform grid; if several sign changes show
/// up (noisy estimates), the crossing closest to the median crossing is
/// kept. That bracket is then refined by [`bracketed_root`].
pub fn find_y0<C: LambdaCurve + ?Sized>(curve: &C, search: &RootSearch) -> Result<f64> {
    let (dlo, dhi) = curve.domain();
    let lo = search.lower.max(dlo);
    let hi = search.upper.min(dhi);
    if !(hi > lo) {
        return Err(Error::Invalid(format!("empty root search interval [{lo}, {hi}]")));
    }
    let ys = linspace(lo, hi, search.scan_points.max(2));
    let vals = ys.iter().map(|y| curve.eval(*y)).collect::<Result<Vec<_>>>()?;
    find_y0_on_grid(curve, &ys, &vals, &search.root)
}

/// Same as [`find_y0`] with a precomputed scan.
pub fn find_y0_on_grid<C: LambdaCurve + ?Sized>(
    curve: &C,
    ys: &[f64],
    vals: &[f64],
    opts: &RootOptions,
) -> Result<f64> {
    let idx = sign_changes(vals);
    if idx.is_empty() {
        return Err(Error::Bracketing {
            lower: ys[0],
            upper: ys[ys.len() - 1],
            f_lower: vals[0],
            f_upper: vals[vals.len() - 1],
        });
    }
    let locs: Vec<f64> = idx
        .iter()
        .map(|&k| {
            if vals[k] == 0.0 {
                ys[k]
            } else {
                let t = vals[k] / (vals[k] - vals[k + 1]);
                ys[k] + t * (ys[k + 1] - ys[k])
            }
        })
        .collect();
    let pick = idx[median_crossing(&locs).expect("non-empty")];
    if vals[pick] == 0.0 {
        return Ok(ys[pick]);
    }
    bracketed_root(|y| curve.eval(y), ys[pick], ys[pick + 1], opts)
}

/// `B = −λ'(y₀)` by Richardson-extrapolated centred differences.
pub fn recover_b<C: LambdaCurve + ?Sized>(curve: &C, y0: f64, step: f64) -> Result<Derivative> {
    let (lo, hi) = curve.domain();
    let step = step.min(0.999 * (y0 - lo)).min(0.999 * (hi - y0));
    if !(step > 0.0) {
        return Err(Error::Singularity {
            at: y0,
            reason: "root sits on the edge of the lambda domain".into(),
        });
    }
    let d = richardson_derivative(|y| curve.eval(y), y0, step, 4)?;
    Ok(Derivative {
        value: -d.value,
        error: d.error,
    })
}

/// `λ` tabulated with its root, slope-law `B` and (optionally) the oracle
/// coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaField {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub y0: f64,
    pub b: f64,
    pub b_error: f64,
    pub quad_tol: f64,
    pub coefficients: Option<CoefficientPair>,
}

impl LambdaField {
    /// Tabulates `curve`, finds the root on the same grid and recovers `B`.
    pub fn build<C: LambdaCurve + ?Sized>(curve: &C, grid: Vec<f64>, quad_tol: f64, b_step: f64) -> Result<Self> {
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("lambda grid must be strictly increasing".into()));
        }
        let values = grid.iter().map(|y| curve.eval(*y)).collect::<Result<Vec<_>>>()?;
        let y0 = find_y0_on_grid(
            curve,
            &grid,
            &values,
            &RootOptions {
                x_tol: 1e-14,
                max_iter: 300,
            },
        )?;
        let b = recover_b(curve, y0, b_step)?;
        Ok(Self {
            grid,
            values,
            y0,
            b: b.value,
            b_error: b.error,
            quad_tol,
            coefficients: None,
        })
    }

    /// Number of sign changes along the tabulated values.
    pub fn sign_change_count(&self) -> usize {
        sign_changes(&self.values).len()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["y", "lambda"])?;
        for (y, v) in self.grid.iter().zip(&self.values) {
            w.write_record([fmt_f64(*y), fmt_f64(*v)])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn metadata(&self) -> LambdaMeta {
        LambdaMeta {
            y0: self.y0,
            b_recovered: self.b,
            b_error: self.b_error,
            a: self.coefficients.map(|c| c.a),
            b: self.coefficients.map(|c| c.b),
            quad_tol: self.quad_tol,
            grid_points: self.grid.len(),
            sign_changes: self.sign_change_count(),
        }
    }
}

/// Sidecar written next to `lambda.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMeta {
    pub y0: f64,
    pub b_recovered: f64,
    pub b_error: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub quad_tol: f64,
    pub grid_points: usize,
    pub sign_changes: usize,
}

/// `λ̃(·|x)` along a `y` grid for one covariate point, with per-value error
/// estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTildeRow {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HomoscedasticConsistent,
    Heteroscedastic,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::HomoscedasticConsistent => "homoscedastic-consistent",
            Verdict::Heteroscedastic => "heteroscedastic",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub verdict: Verdict,
    /// Covariate rows where `λ̃` changes sign beyond the noise threshold.
    pub sign_changing_rows: usize,
    pub significant_points: usize,
    pub total_points: usize,
}

/// Minimum `y` points per covariate row.
pub const DIAGNOSTIC_MIN_Y: usize = 20;

/// Sign-change test on `λ̃`.
///
/// Under homoscedasticity `∂σ/∂xᵢ = 0`, so `λ̃(·|x)` keeps the sign of
/// `−∂g/∂xᵢ` for every `y`. A heteroscedastic scale makes the numerator
/// affine in `h(y)` with nonzero slope wherever `∂σ/∂xᵢ ≠ 0`, so `λ̃(·|x)`
/// changes sign. A value counts only if it exceeds
/// [`NOISE_MULTIPLIER`] times its error estimate.
pub fn homoscedasticity_diagnostic(rows: &[LambdaTildeRow]) -> Result<DiagnosticReport> {
    if rows.is_empty() {
        return Err(Error::Invalid("diagnostic grid is empty".into()));
    }
    let mut sign_changing_rows = 0;
    let mut significant_points = 0;
    let mut total_points = 0;
    for row in rows {
        if row.values.len() < DIAGNOSTIC_MIN_Y || row.errors.len() != row.values.len() {
            return Err(Error::Invalid(format!(
                "diagnostic rows need at least {DIAGNOSTIC_MIN_Y} y-points with matching error estimates"
            )));
        }
        let mut pos = false;
        let mut neg = false;
        for (v, e) in row.values.iter().zip(&row.errors) {
            total_points += 1;
            let thr = NOISE_MULTIPLIER * e.abs().max(f64::MIN_POSITIVE);
            if *v > thr {
                pos = true;
                significant_points += 1;
            } else if *v < -thr {
                neg = true;
                significant_points += 1;
            }
        }
        if pos && neg {
            sign_changing_rows += 1;
        }
    }
    let verdict = if sign_changing_rows > 0 {
        Verdict::Heteroscedastic
    } else if significant_points == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::HomoscedasticConsistent
    };
    Ok(DiagnosticReport {
        verdict,
        sign_changing_rows,
        significant_points,
        total_points,
    })
}

/// Exact `λ̃` rows from a conditional-CDF source; the error estimate is a
/// rounding-level bound `1e-12·max(1, |λ̃|)`.
pub fn tabulate_lambda_tilde<S: ConditionalCdf + ?Sized>(
    source: &S,
    xs: &[Vec<f64>],
    ys: &[f64],
    coord: usize,
) -> Result<Vec<LambdaTildeRow>> {
    xs.iter()
        .map(|x| {
            let values = ys
                .iter()
                .map(|y| lambda_tilde_at(source, *y, x, coord))
                .collect::<Result<Vec<_>>>()?;
            let errors = values.iter().map(|v| 1e-12 * v.abs().max(1.0)).collect();
            Ok(LambdaTildeRow {
                x: x.clone(),
                values,
                errors,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(name: &str) -> TransformationModel {
        TransformationModel::registered(name).unwrap()
    }

    #[test]
    fn ratio_and_density_guard() {
        assert_eq!(lambda_tilde(-0.398942, 0.398942).unwrap(), -1.0);
        assert!(matches!(lambda_tilde(1.0, 0.0), Err(Error::DegenerateDensity { .. })));
        let m1 = model("M1");
        let v = lambda_tilde_at(&m1, 0.0, &[0.0], 0).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
    }

    #[test]
    fn integrated_lambda_closed_forms() {
        let m1 = model("M1");
        let w = WeightFunction::unit_cube(1);
        let l = |y| integrate_lambda(&m1, &w, y, 1e-12).unwrap();
        assert!((l(0.0) + 0.5).abs() < 1e-11);
        assert!(l(-0.5).abs() < 1e-11);
        let m3 = model("M3");
        let v = integrate_lambda(&m3, &w, 0.0, 1e-12).unwrap();
        assert!((v + 0.5).abs() < 1e-11);
    }

    #[test]
    fn coefficient_fixtures() {
        let w = WeightFunction::unit_cube(1);
        for name in ["M1", "M3"] {
            let c = coefficients_ab(&model(name), &w, 1e-13).unwrap();
            assert!((c.a - 0.5).abs() < 1e-12);
            assert!((c.b - 1.0).abs() < 1e-12);
        }
        let c4 = coefficients_ab(&model("M4"), &w, 1e-13).unwrap();
        assert!((c4.a - 1.5).abs() < 1e-12);
        assert!((c4.b + 1.0).abs() < 1e-12);
        assert!(matches!(
            coefficients_ab(&model("M2"), &w, 1e-13),
            Err(Error::Homoscedastic { .. })
        ));
    }

    #[test]
    fn root_fixtures() {
        let w = WeightFunction::unit_cube(1);
        let search = RootSearch::new(-3.0, 3.0);
        let m1 = model("M1");
        let y0 = find_y0(&WeightedLambda::new(&m1, &w, 1e-13).unwrap(), &search).unwrap();
        assert!((y0 + 0.5).abs() < 1e-10);
        let m3 = model("M3");
        let y0 = find_y0(&WeightedLambda::new(&m3, &w, 1e-13).unwrap(), &search).unwrap();
        assert!((y0 - (-0.5f64).asinh()).abs() < 1e-10);
        assert!((y0 + 0.481_212).abs() < 1e-6);
        let odd = FnCurve(|y: f64| -y);
        let r = find_y0(&odd, &RootSearch::new(-1.0, 1.0)).unwrap();
        assert!(r.abs() < 1e-14);
        let none = FnCurve(|y: f64| 1.0 + y * y);
        assert!(matches!(
            find_y0(&none, &RootSearch::new(-1.0, 1.0)),
            Err(Error::Bracketing { .. })
        ));
    }

    #[test]
    fn median_rule_ignores_edge_crossings() {
        // Spurious crossings near both ends plus the genuine one at 0.2.
        let noisy = FnCurve(|y: f64| {
            let base = -(y - 0.2);
            if !(-2.8..=2.8).contains(&y) {
                -base
            } else {
                base
            }
        });
        let r = find_y0(&noisy, &RootSearch::new(-3.0, 3.0)).unwrap();
        assert!((r - 0.2).abs() < 1e-12);
    }

    #[test]
    fn slope_law_recovers_b() {
        let w = WeightFunction::unit_cube(1);
        for (name, b_true) in [("M1", 1.0), ("M3", 1.0), ("M4", -1.0), ("M6", 1.0)] {
            let m = model(name);
            let curve = WeightedLambda::new(&m, &w, 1e-13).unwrap();
            let y0 = find_y0(&curve, &RootSearch::new(-3.0, 3.0)).unwrap();
            let b = recover_b(&curve, y0, 0.05).unwrap();
            assert!((b.value - b_true).abs() < 1e-6, "{name}: {b:?}");
        }
        let scaled = FnCurve(|y: f64| 2.5 * -(0.5 + y));
        let b = recover_b(&scaled, -0.5, 0.1).unwrap();
        assert!((b.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_identity_holds_on_grid() {
        let w = WeightFunction::unit_cube(1);
        let tol = 1e-12;
        for name in ["M1", "M3", "M4", "M6"] {
            let m = model(name);
            let c = coefficients_ab(&m, &w, 1e-13).unwrap();
            for k in 0..=40 {
                let y = -3.0 + 0.15 * k as f64;
                let lam = integrate_lambda(&m, &w, y, tol).unwrap();
                let closed = -(c.a + c.b * m.h.eval(y)) / m.h.derivative(y);
                assert!((lam - closed).abs() <= 10.0 * tol, "{name} at {y}: {lam} vs {closed}");
            }
        }
    }

    #[test]
    fn two_covariate_model() {
        let m5 = model("M5");
        let w = m5.default_weight();
        let c = coefficients_ab(&m5, &w, 1e-12).unwrap();
        assert!((c.a - 0.25).abs() < 1e-10);
        assert!((c.b - 1.0).abs() < 1e-10);
        let y0 = find_y0(
            &WeightedLambda::new(&m5, &w, 1e-12).unwrap(),
            &RootSearch::new(-3.0, 3.0),
        )
        .unwrap();
        assert!((y0 + 0.25).abs() < 1e-9);
    }

    #[test]
    fn affine_invariance_of_lambda() {
        let w = WeightFunction::unit_cube(1);
        for name in ["M1", "M3"] {
            let m = model(name);
            let t = m.affine(2.7, -1.3).unwrap();
            for k in 0..=20 {
                let y = -2.0 + 0.2 * k as f64;
                let a = integrate_lambda(&m, &w, y, 1e-13).unwrap();
                let b = integrate_lambda(&t, &w, y, 1e-13).unwrap();
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn root_is_unique_on_oracle_grid() {
        let w = WeightFunction::unit_cube(1);
        for name in ["M1", "M3", "M4"] {
            let m = model(name);
            let curve = WeightedLambda::new(&m, &w, 1e-12).unwrap();
            let field = LambdaField::build(&curve, linspace(-4.0, 4.0, 81), 1e-12, 0.05).unwrap();
            assert_eq!(field.sign_change_count(), 1, "{name}");
            // Sign pattern: λ(y)(y − y₀) has the sign of −B.
            let c = coefficients_ab(&m, &w, 1e-13).unwrap();
            for (y, v) in field.grid.iter().zip(&field.values) {
                if (y - field.y0).abs() > 0.1 {
                    assert_eq!((v * (y - field.y0)).signum(), -c.b.signum());
                }
            }
        }
    }

    #[test]
    fn diagnostic_fixtures() {
        let ys = linspace(-3.0, 3.0, 25);
        let xs = vec![vec![0.0], vec![0.5], vec![1.0]];
        let m2 = model("M2");
        let rows = tabulate_lambda_tilde(&m2, &xs, &ys, 0).unwrap();
        // λ̃ = −1/h'(y) = −1 everywhere.
        assert!(rows.iter().all(|r| r.values.iter().all(|v| (v + 1.0).abs() < 1e-12)));
        assert_eq!(
            homoscedasticity_diagnostic(&rows).unwrap().verdict,
            Verdict::HomoscedasticConsistent
        );
        let m1 = model("M1");
        let rows = tabulate_lambda_tilde(&m1, &[vec![0.0]], &ys, 0).unwrap();
        for (y, v) in ys.iter().zip(&rows[0].values) {
            assert!((v + (1.0 + y)).abs() < 1e-12);
        }
        assert_eq!(
            homoscedasticity_diagnostic(&rows).unwrap().verdict,
            Verdict::Heteroscedastic
        );
        let zeros = vec![LambdaTildeRow {
            x: vec![0.0],
            values: vec![0.0; 20],
            errors: vec![1e-9; 20],
        }];
        assert_eq!(
            homoscedasticity_diagnostic(&zeros).unwrap().verdict,
            Verdict::Inconclusive
        );
        assert!(homoscedasticity_diagnostic(&[]).is_err());
    }

    #[test]
    fn tabulated_lambda_refuses_extrapolation() {
        let t = TabulatedLambda::new(linspace(-1.0, 1.0, 11), linspace(1.0, -1.0, 11)).unwrap();
        assert!((t.eval(0.05).unwrap() + 0.05).abs() < 1e-14);
        assert!(matches!(t.eval(1.5), Err(Error::Domain(_))));
    }
}
