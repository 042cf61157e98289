//! Analytic transformation models `h(Y) = g(X) + σ(X)ε`.
//!
//! Components are small parametric families chosen so that the affine
//! re-normalization `(a·h + b, a·g + b, a·σ)` stays inside the same family.
//! That keeps every model constructible from a config file and makes the
//! non-identifiability of the affine map directly testable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::ErrorDistribution;
use crate::error::{Error, Result};
use crate::sample::SampleSet;
use crate::weight::WeightFunction;

/// Base shape of the transformation before the affine wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Sinh,
    /// `y + c·y³` with `c ≥ 0`.
    Cubic {
        c: f64,
    },
}

/// `h(y) = scale · base(y) + shift` with `scale > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub kind: TransformKind,
    pub scale: f64,
    pub shift: f64,
}

impl Transform {
    pub fn new(kind: TransformKind) -> Self {
        Self {
            kind,
            scale: 1.0,
            shift: 0.0,
        }
    }

    fn base(&self, y: f64) -> f64 {
        match self.kind {
            TransformKind::Identity => y,
            TransformKind::Sinh => y.sinh(),
            TransformKind::Cubic { c } => y + c * y * y * y,
        }
    }

    fn base_prime(&self, y: f64) -> f64 {
        match self.kind {
            TransformKind::Identity => 1.0,
            TransformKind::Sinh => y.cosh(),
            TransformKind::Cubic { c } => 1.0 + 3.0 * c * y * y,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.scale * self.base(y) + self.shift
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.scale * self.base_prime(y)
    }

    pub fn inverse(&self, z: f64) -> Result<f64> {
        let t = (z - self.shift) / self.scale;
        match self.kind {
            TransformKind::Identity => Ok(t),
            TransformKind::Sinh => Ok(t.asinh()),
            TransformKind::Cubic { .. } => invert_monotone(|y| (self.base(y), self.base_prime(y)), t, 0.0),
        }
    }

    fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            kind: self.kind,
            scale: a * self.scale,
            shift: a * self.shift + b,
        }
    }
}

/// Solves `f(y) = target` for a strictly increasing `f`.
///
/// `f` returns value and derivative. The bracket around `start` grows
/// geometrically until it contains the target, bisection narrows it and a
/// single Newton step polishes the result (kept only if it stays inside the
/// final bracket).
pub fn invert_monotone<F>(f: F, target: f64, start: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    if !target.is_finite() {
        return Err(Error::Inversion { value: target });
    }
    let mut step = 1.0;
    let mut lo = start - step;
    let mut hi = start + step;
    let mut grown = 0;
    while f(lo).0 > target {
        step *= 2.0;
        lo = start - step;
        grown += 1;
        if grown > 200 || !lo.is_finite() {
            return Err(Error::Inversion { value: target });
        }
    }
    while f(hi).0 < target {
        step *= 2.0;
        hi = start + step;
        grown += 1;
        if grown > 200 || !hi.is_finite() {
            return Err(Error::Inversion { value: target });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let y = 0.5 * (lo + hi);
    let (v, d) = f(y);
    if d > 0.0 && d.is_finite() {
        let polished = y - (v - target) / d;
        if polished >= lo && polished <= hi {
            return Ok(polished);
        }
    }
    Ok(y)
}

/// Regression function family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regression {
    /// `intercept + coef · x`.
    Linear { intercept: f64, coef: Vec<f64> },
}

impl Regression {
    pub fn dim(&self) -> usize {
        match self {
            Regression::Linear { coef, .. } => coef.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Regression::Linear { intercept, coef } => intercept + coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
        }
    }

    pub fn partial(&self, _x: &[f64], coord: usize) -> f64 {
        match self {
            Regression::Linear { coef, .. } => coef[coord],
        }
    }

    fn affine(&self, a: f64, b: f64) -> Self {
        match self {
            Regression::Linear { intercept, coef } => Regression::Linear {
                intercept: a * intercept + b,
                coef: coef.iter().map(|c| a * c).collect(),
            },
        }
    }
}

/// Scale function family; must be positive on the weight support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scale {
    Constant {
        value: f64,
    },
    /// `scale · exp(rates · x)`.
    Exp {
        scale: f64,
        rates: Vec<f64>,
    },
    /// `intercept + coef · x`.
    Linear {
        intercept: f64,
        coef: Vec<f64>,
    },
}

impl Scale {
    /// `None` for the constant family, which works in any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Scale::Constant { .. } => None,
            Scale::Exp { rates, .. } => Some(rates.len()),
            Scale::Linear { coef, .. } => Some(coef.len()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Scale::Constant { value } => *value,
            Scale::Exp { scale, rates } => scale * rates.iter().zip(x).map(|(r, v)| r * v).sum::<f64>().exp(),
            Scale::Linear { intercept, coef } => intercept + coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
        }
    }

    pub fn partial(&self, x: &[f64], coord: usize) -> f64 {
        match self {
            Scale::Constant { .. } => 0.0,
            Scale::Exp { rates, .. } => rates[coord] * self.eval(x),
            Scale::Linear { coef, .. } => coef[coord],
        }
    }

    fn affine(&self, a: f64) -> Self {
        match self {
            Scale::Constant { value } => Scale::Constant { value: a * value },
            Scale::Exp { scale, rates } => Scale::Exp {
                scale: a * scale,
                rates: rates.clone(),
            },
            Scale::Linear { intercept, coef } => Scale::Linear {
                intercept: a * intercept,
                coef: coef.iter().map(|c| a * c).collect(),
            },
        }
    }
}

/// Anything that exposes a conditional CDF of `Y` given `X` with its
/// partial derivatives: the analytic model or a kernel estimate of it.
pub trait ConditionalCdf: Sync {
    fn dim(&self) -> usize;

    fn cdf(&self, y: f64, x: &[f64]) -> Result<f64>;

    /// `(∂F/∂y, ∂F/∂x_coord)` at `(y, x)`.
    fn partials(&self, y: f64, x: &[f64], coord: usize) -> Result<(f64, f64)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationModel {
    pub name: String,
    pub h: Transform,
    pub g: Regression,
    pub sigma: Scale,
    pub error: ErrorDistribution,
}

impl TransformationModel {
    pub fn new(
        name: impl Into<String>,
        h: Transform,
        g: Regression,
        sigma: Scale,
        error: ErrorDistribution,
    ) -> Result<Self> {
        let model = Self {
            name: name.into(),
            h,
            g,
            sigma,
            error,
        };
        if let Some(d) = model.sigma.dim() {
            if d != model.g.dim() {
                return Err(Error::Invalid(format!(
                    "g has {} covariate(s) but sigma has {d}",
                    model.g.dim()
                )));
            }
        }
        if model.g.dim() == 0 {
            return Err(Error::Invalid("models need at least one covariate".into()));
        }
        if !(model.h.scale > 0.0) {
            return Err(Error::Invalid("transformation scale must be positive".into()));
        }
        if let TransformKind::Cubic { c } = model.h.kind {
            if !(c >= 0.0) {
                return Err(Error::Invalid("cubic coefficient must be nonnegative".into()));
            }
        }
        Ok(model)
    }

    /// Registered fixtures, all with `v ≡ 1` on `[0, 1]^d` as natural weight:
    ///
    /// * `M1`: `h = id`, `g = x`, `σ = eˣ`, normal errors.
    /// * `M2`: `M1` with `σ ≡ 1` (homoscedastic).
    /// * `M3`: `h = sinh`, otherwise `M1`.
    /// * `M4`: `M1` with `σ = e^{-x}` (negative `B`).
    /// * `M5`: two covariates, `g = x₁ + x₂/2`, `σ = exp(x₁ + 0.3 x₂)`.
    /// * `M6`: cubic `h(y) = y + y³/3`, logistic errors, otherwise `M1`.
    pub fn registered(name: &str) -> Result<Self> {
        let id = Transform::new(TransformKind::Identity);
        let lin1 = Regression::Linear {
            intercept: 0.0,
            coef: vec![1.0],
        };
        let exp1 = |r: f64| Scale::Exp {
            scale: 1.0,
            rates: vec![r],
        };
        let normal = ErrorDistribution::standard_normal();
        match name {
            "M1" => Self::new("M1", id, lin1, exp1(1.0), normal),
            "M2" => Self::new("M2", id, lin1, Scale::Constant { value: 1.0 }, normal),
            "M3" => Self::new("M3", Transform::new(TransformKind::Sinh), lin1, exp1(1.0), normal),
            "M4" => Self::new("M4", id, lin1, exp1(-1.0), normal),
            "M5" => Self::new(
                "M5",
                id,
                Regression::Linear {
                    intercept: 0.0,
                    coef: vec![1.0, 0.5],
                },
                Scale::Exp {
                    scale: 1.0,
                    rates: vec![1.0, 0.3],
                },
                normal,
            ),
            "M6" => Self::new(
                "M6",
                Transform::new(TransformKind::Cubic { c: 1.0 / 3.0 }),
                lin1,
                exp1(1.0),
                ErrorDistribution::standard_logistic(),
            ),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (registered: {})",
                Self::registered_names().join(", ")
            ))),
        }
    }

    pub fn registered_names() -> &'static [&'static str] {
        &["M1", "M2", "M3", "M4", "M5", "M6"]
    }

    /// Natural weight of the registered fixtures: `v ≡ 1` on the unit cube.
    pub fn default_weight(&self) -> WeightFunction {
        WeightFunction::unit_cube(self.dim())
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// The observationally equivalent model `(a·h + b, a·g + b, a·σ)`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !b.is_finite() {
            return Err(Error::Invalid(format!(
                "affine map needs a > 0 and finite b (got a = {a}, b = {b})"
            )));
        }
        Ok(Self {
            name: format!("{}[{a}h+{b}]", self.name),
            h: self.h.affine(a, b),
            g: self.g.affine(a, b),
            sigma: self.sigma.affine(a),
            error: self.error,
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "covariate has {} coordinate(s), model expects {}",
                x.len(),
                self.dim()
            )));
        }
        let s = self.sigma.eval(x);
        if !(s > 0.0) {
            return Err(Error::Domain(format!("sigma(x) = {s} is not positive at x = {x:?}")));
        }
        Ok(s)
    }

    /// Standardized residual `(h(y) - g(x)) / σ(x)`.
    pub fn standardized(&self, y: f64, x: &[f64]) -> Result<f64> {
        let s = self.check_point(x)?;
        Ok((self.h.eval(y) - self.g.eval(x)) / s)
    }

    pub fn cond_cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        if y == f64::INFINITY {
            self.check_point(x)?;
            return Ok(1.0);
        }
        if y == f64::NEG_INFINITY {
            self.check_point(x)?;
            return Ok(0.0);
        }
        Ok(self.error.cdf(self.standardized(y, x)?))
    }

    pub fn cond_cdf_dy(&self, y: f64, x: &[f64]) -> Result<f64> {
        let s = self.check_point(x)?;
        let z = (self.h.eval(y) - self.g.eval(x)) / s;
        Ok(self.error.density(z) * self.h.derivative(y) / s)
    }

    pub fn cond_cdf_dxi(&self, y: f64, x: &[f64], coord: usize) -> Result<f64> {
        let s = self.check_point(x)?;
        if coord >= self.dim() {
            return Err(Error::Index {
                index: coord,
                dim: self.dim(),
            });
        }
        let resid = self.h.eval(y) - self.g.eval(x);
        let z = resid / s;
        let numer = s * self.g.partial(x, coord) + resid * self.sigma.partial(x, coord);
        Ok(-self.error.density(z) * numer / (s * s))
    }

    /// Checks the standing assumptions on a working domain: standardized
    /// errors, `σ > 0` on the weight box, `h' > 0` and an accurate inverse.
    pub fn validate(&self, weight: &WeightFunction, y_range: (f64, f64)) -> Result<()> {
        self.error.validate()?;
        if weight.dim() != self.dim() {
            return Err(Error::Invalid(format!(
                "weight has {} coordinate(s), model has {}",
                weight.dim(),
                self.dim()
            )));
        }
        for x in weight.probe_points(5) {
            self.check_point(&x)?;
        }
        let (lo, hi) = y_range;
        for k in 0..=200 {
            let y = lo + (hi - lo) * k as f64 / 200.0;
            let d = self.h.derivative(y);
            if !(d > 0.0) {
                return Err(Error::Domain(format!("h'({y}) = {d} is not positive")));
            }
            let back = self.h.inverse(self.h.eval(y))?;
            if (back - y).abs() > 1e-10 * (1.0 + y.abs()) {
                return Err(Error::Inversion { value: self.h.eval(y) });
            }
        }
        Ok(())
    }

    /// Draws `n` rows with `X` uniform on `covariates` and `ε` from the error
    /// law, independently; `Y = h⁻¹(g(X) + σ(X)ε)`.
    pub fn simulate(&self, n: usize, seed: u64, covariates: &CovariateLaw) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be at least 1".into()));
        }
        self.error.validate()?;
        let CovariateLaw::Uniform { lower, upper } = covariates;
        if lower.len() != self.dim() || upper.len() != self.dim() {
            return Err(Error::Invalid("covariate box dimension mismatch".into()));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
            return Err(Error::Invalid("covariate box must have positive width".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim();
        let mut ys = Vec::with_capacity(n);
        let mut xs = Vec::with_capacity(n * dim);
        let mut x = vec![0.0; dim];
        for _ in 0..n {
            for (k, v) in x.iter_mut().enumerate() {
                *v = rng.gen_range(lower[k]..upper[k]);
            }
            let eps = self.error.sample(&mut rng);
            let s = self.check_point(&x)?;
            let z = self.g.eval(&x) + s * eps;
            ys.push(self.h.inverse(z)?);
            xs.extend_from_slice(&x);
        }
        SampleSet::new(ys, xs, dim)
    }
}

impl ConditionalCdf for TransformationModel {
    fn dim(&self) -> usize {
        TransformationModel::dim(self)
    }

    fn cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        self.cond_cdf(y, x)
    }

    fn partials(&self, y: f64, x: &[f64], coord: usize) -> Result<(f64, f64)> {
        Ok((self.cond_cdf_dy(y, x)?, self.cond_cdf_dxi(y, x, coord)?))
    }
}

/// Covariate law used by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CovariateLaw {
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
}

impl CovariateLaw {
    /// Uniform on the weight support.
    pub fn on_weight(weight: &WeightFunction) -> Self {
        CovariateLaw::Uniform {
            lower: weight.lower().to_vec(),
            upper: weight.upper().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Φ via the Maclaurin series of erf, summed in plain f64 for moderate
    /// arguments. Independent of the library's erfc path.
    fn phi_series(z: f64) -> f64 {
        let x = z / std::f64::consts::SQRT_2;
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        0.5 * (1.0 + 2.0 / std::f64::consts::PI.sqrt() * sum)
    }

    fn phi_density(z: f64) -> f64 {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn cond_cdf_fixture_values() {
        let m1 = TransformationModel::registered("M1").unwrap();
        assert_eq!(m1.cond_cdf(0.0, &[0.0]).unwrap(), 0.5);
        assert_eq!(m1.cond_cdf(f64::INFINITY, &[0.3]).unwrap(), 1.0);
        assert!((m1.cond_cdf(60.0, &[0.3]).unwrap() - 1.0).abs() < 1e-15);
        let v = m1.cond_cdf(1.0, &[0.0]).unwrap();
        assert!((v - phi_series(1.0)).abs() < 1e-14);
        assert!((v - 0.841_345).abs() < 1e-6);
    }

    #[test]
    fn cond_cdf_dy_fixture_values() {
        let m1 = TransformationModel::registered("M1").unwrap();
        let d = m1.cond_cdf_dy(0.0, &[0.0]).unwrap();
        assert!((d - phi_density(0.0)).abs() < 1e-15);
        assert!((d - 0.398_942).abs() < 1e-6);
        let ln2 = 2f64.ln();
        let d = m1.cond_cdf_dy(0.0, &[ln2]).unwrap();
        assert!((d - phi_density(-ln2 / 2.0) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn cond_cdf_dxi_fixture_values() {
        let m1 = TransformationModel::registered("M1").unwrap();
        let d = m1.cond_cdf_dxi(0.0, &[0.0], 0).unwrap();
        assert!((d + phi_density(0.0)).abs() < 1e-15);
        let m2 = TransformationModel::registered("M2").unwrap();
        for (y, x) in [(0.3, 0.2), (-1.0, 0.9)] {
            let d = m2.cond_cdf_dxi(y, &[x], 0).unwrap();
            assert!((d + phi_density(y - x)).abs() < 1e-15);
        }
        assert!(matches!(
            m1.cond_cdf_dxi(0.0, &[0.0], 1),
            Err(Error::Index { index: 1, dim: 1 })
        ));
    }

    #[test]
    fn nonpositive_sigma_is_a_domain_error() {
        let m = TransformationModel::new(
            "bad",
            Transform::new(TransformKind::Identity),
            Regression::Linear {
                intercept: 0.0,
                coef: vec![1.0],
            },
            Scale::Linear {
                intercept: -0.5,
                coef: vec![1.0],
            },
            ErrorDistribution::standard_normal(),
        )
        .unwrap();
        assert!(matches!(m.cond_cdf(0.0, &[0.2]), Err(Error::Domain(_))));
        assert!(matches!(m.cond_cdf_dy(0.0, &[0.2]), Err(Error::Domain(_))));
        assert!(m.cond_cdf(0.0, &[0.7]).is_ok());
    }

    #[test]
    fn numeric_inverse_matches_closed_forms() {
        let cubic = Transform::new(TransformKind::Cubic { c: 1.0 / 3.0 });
        for y in [-7.5, -1.0, 0.0, 0.3, 4.2] {
            let back = cubic.inverse(cubic.eval(y)).unwrap();
            assert!((back - y).abs() < 1e-12, "{y} -> {back}");
        }
        // The generic inverter agrees with asinh.
        for z in [-30.0, -0.5, 0.0, 2.0, 1e3] {
            let y = invert_monotone(|y: f64| (y.sinh(), y.cosh()), z, 0.0).unwrap();
            assert!((y - z.asinh()).abs() < 1e-12);
        }
        assert!(invert_monotone(|y| (y, 1.0), f64::NAN, 0.0).is_err());
    }

    #[test]
    fn registered_models_validate() {
        for name in TransformationModel::registered_names() {
            let m = TransformationModel::registered(name).unwrap();
            m.validate(&m.default_weight(), (-6.0, 6.0)).unwrap();
        }
        assert!(TransformationModel::registered("M9").is_err());
    }

    #[test]
    fn simulate_is_deterministic_and_rejects_bad_errors() {
        let m1 = TransformationModel::registered("M1").unwrap();
        let law = CovariateLaw::on_weight(&m1.default_weight());
        let a = m1.simulate(3, 17, &law).unwrap();
        let b = m1.simulate(3, 17, &law).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 3);
        let c = m1.simulate(3, 18, &law).unwrap();
        assert_ne!(a, c);

        let mut m2 = TransformationModel::registered("M2").unwrap();
        m2.error = ErrorDistribution::Normal { mean: 0.0, sd: 2.0 };
        assert!(matches!(m2.simulate(3, 1, &law), Err(Error::Invalid(_))));
    }

    #[test]
    fn simulated_residuals_are_centred() {
        let m1 = TransformationModel::registered("M1").unwrap();
        let n = 100_000;
        let s = m1
            .simulate(n, 2024, &CovariateLaw::on_weight(&m1.default_weight()))
            .unwrap();
        let mean = (0..n)
            .map(|i| m1.standardized(s.y()[i], s.row(i)).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    fn models() -> Vec<TransformationModel> {
        ["M1", "M3", "M4", "M6"]
            .iter()
            .map(|n| TransformationModel::registered(n).unwrap())
            .collect()
    }

    proptest! {
        #[test]
        fn cdf_is_strictly_increasing_in_y(x in 0.0f64..1.0, y in -3.0f64..3.0, dy in 1e-3f64..1.0) {
            for m in models() {
                let a = m.cond_cdf(y, &[x]).unwrap();
                let b = m.cond_cdf(y + dy, &[x]).unwrap();
                prop_assert!(b >= a);
                // Strictness is only visible before the upper tail saturates.
                if 1.0 - b > 1e-12 {
                    prop_assert!(b > a);
                }
            }
        }

        #[test]
        fn partials_match_finite_differences(x in 0.05f64..0.95, y in -2.5f64..2.5) {
            let h = 1e-5;
            for m in models() {
                let (dy, dx) = m.partials(y, &[x], 0).unwrap();
                let fy = (m.cond_cdf(y + h, &[x]).unwrap() - m.cond_cdf(y - h, &[x]).unwrap()) / (2.0 * h);
                let fx = (m.cond_cdf(y, &[x + h]).unwrap() - m.cond_cdf(y, &[x - h]).unwrap()) / (2.0 * h);
                prop_assert!((dy - fy).abs() < 1e-6, "{} dy {} vs {}", m.name, dy, fy);
                prop_assert!((dx - fx).abs() < 1e-6, "{} dx {} vs {}", m.name, dx, fx);
            }
        }

        #[test]
        fn affine_relabelling_leaves_cdf_unchanged(
            a in 0.1f64..10.0, b in -5.0f64..5.0, x in 0.0f64..1.0, y in -3.0f64..3.0
        ) {
            for m in models() {
                let t = m.affine(a, b).unwrap();
                let u = m.cond_cdf(y, &[x]).unwrap();
                let v = t.cond_cdf(y, &[x]).unwrap();
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
