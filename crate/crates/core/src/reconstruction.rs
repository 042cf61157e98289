//! Closed-form reconstruction of `h` from `λ`.
//!
//! On either side of the root `y₀` the identifying equation
//! `h' = −(A + B h) / λ` integrates to
//!
//! ```text
//! h(y) = ((A + B c) · exp(−B ∫_{y_c}^{y} 1/λ) − A) / B
//! ```
//!
//! for an anchor `h(y_c) = c`. The upper branch is anchored at `(y₁, α)`,
//! the lower one at `(y₂, α₂)` where `α₂` makes the two branches meet at
//! `y₀` with equal slopes. `h(y₀) = −A/B` exactly.
//!
//! `1/λ` has a simple pole at `y₀`. Integrals are split into panels that
//! shrink geometrically toward the pole, and grid points closer than the
//! excision half-width are filled by monotone cubic interpolation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{CoefficientPair, LambdaCurve};
use crate::model::TransformationModel;
use crate::numeric::interp::Pchip;
use crate::numeric::isotonic::{pava_increasing, repaired_count};
use crate::numeric::lagrange_derivative;
use crate::numeric::quadrature::{geometric_breaks, integrate_panels, QuadOptions};
use crate::sample::fmt_f64;

/// Residual bound `|h'λ + A + Bh| ≤ RESIDUAL_TOL · (1 + |h|)`.
pub const RESIDUAL_TOL: f64 = 1e-5;
/// Allowed gap between the one-sided slopes at `y₀`.
pub const MATCH_TOL: f64 = 1e-4;
/// Share of repaired grid points above which a fit is flagged.
pub const REPAIR_WARNING_RATE: f64 = 0.2;

/// Identification constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintSet {
    /// `h(y₁) = α` with the location `h(y₀) = −A/B` implied by `A`.
    Canonical { y1: f64, alpha: f64 },
    /// `h(y_a) = α_a`, `h(y_b) = α_b`.
    TwoPoint {
        ya: f64,
        yb: f64,
        alpha_a: f64,
        alpha_b: f64,
    },
    /// `h(y_a) = α_a`, `h'(y_a) = slope`.
    PointSlope { ya: f64, alpha_a: f64, slope: f64 },
}

impl ConstraintSet {
    pub fn validate(&self, y0: f64, coef: &CoefficientPair) -> Result<()> {
        match *self {
            ConstraintSet::Canonical { y1, alpha } => {
                if !(y1 > y0) {
                    return Err(Error::Constraint(format!(
                        "canonical constraint needs y1 > y0 (y1 = {y1}, y0 = {y0})"
                    )));
                }
                if !(alpha > coef.location()) {
                    return Err(Error::Constraint(format!(
                        "canonical constraint needs alpha > -A/B = {} (alpha = {alpha})",
                        coef.location()
                    )));
                }
            }
            ConstraintSet::TwoPoint {
                ya,
                yb,
                alpha_a,
                alpha_b,
            } => {
                if !(ya < yb) {
                    return Err(Error::Constraint(format!(
                        "two-point constraint needs ya < yb (got {ya}, {yb})"
                    )));
                }
                if !(alpha_a < alpha_b) {
                    return Err(Error::Constraint(format!(
                        "two-point constraint needs alpha_a < alpha_b (got {alpha_a}, {alpha_b})"
                    )));
                }
            }
            ConstraintSet::PointSlope { ya, alpha_a, slope } => {
                if !(slope > 0.0 && slope.is_finite() && alpha_a.is_finite() && ya.is_finite()) {
                    return Err(Error::Constraint(format!(
                        "point-plus-slope constraint needs a finite positive slope (got {slope})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Scheme for the `α₂` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    /// `t₀` as a fraction of `min(y₁ − y₀, y₀ − y₂)`.
    pub t0_fraction: f64,
    pub halvings: usize,
    pub rel_tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            t0_fraction: 0.1,
            halvings: 12,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    /// Excision half-width as a fraction of the grid range.
    pub excision_fraction: f64,
    /// Absolute tolerance of each `∫ 1/λ` segment.
    pub quad_tol: f64,
    /// Lower anchor; defaults to the mirror image of `y₁` about `y₀`.
    pub y2: Option<f64>,
    /// Scale anchor used when the constraints are not canonical; defaults
    /// to the middle of the upper half of the grid.
    pub anchor_y1: Option<f64>,
    pub limit: LimitOptions,
    /// Replace violations of monotonicity by an isotonic fit instead of
    /// failing.
    pub repair: bool,
    /// Exponent used inside the closed form in place of `B`. Residuals
    /// are still computed with `B`.
    pub exponent: Option<f64>,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            excision_fraction: 1e-3,
            quad_tol: 1e-11,
            y2: None,
            anchor_y1: None,
            limit: LimitOptions::default(),
            repair: false,
            exponent: None,
        }
    }
}

/// `∫_{from}^{to} 1/λ(u) du` for `from` and `to` strictly on one side of
/// `y₀`.
///
/// `λ` must keep the sign `−sign(B)·sign(u − y₀)` along the path;
/// anything else means the path meets a zero of `λ` other than `y₀`.
pub fn inv_lambda_integral<C: LambdaCurve + ?Sized>(
    curve: &C,
    from: f64,
    to: f64,
    y0: f64,
    b: f64,
    quad_tol: f64,
) -> Result<f64> {
    if from == to {
        return Ok(0.0);
    }
    let side = (from - y0).signum();
    if side == 0.0 || (to - y0).signum() != side {
        return Err(Error::Singularity {
            at: y0,
            reason: format!("integration path [{from}, {to}] touches the root"),
        });
    }
    let expected = -b.signum() * side;
    let breaks = if (to - y0).abs() < (from - y0).abs() {
        geometric_breaks(from, to, y0)
    } else {
        let mut v = geometric_breaks(to, from, y0);
        v.reverse();
        v
    };
    let opts = QuadOptions {
        abs_tol: quad_tol,
        rel_tol: 1e-12,
        max_panels: 2000,
    };
    let r = integrate_panels(
        |u| {
            let l = curve.eval(u)?;
            if !(l.signum() == expected && l != 0.0) {
                return Err(Error::Singularity {
                    at: u,
                    reason: format!("lambda = {l:e} has the wrong sign away from y0 = {y0}"),
                });
            }
            Ok(1.0 / l)
        },
        &breaks,
        &opts,
    )?;
    Ok(r.value)
}

/// Integrals of `1/λ` from `anchor` to every target, accumulated segment
/// by segment in order of distance from the anchor.
fn chained_integrals<C: LambdaCurve + ?Sized>(
    curve: &C,
    anchor: f64,
    targets: &[f64],
    y0: f64,
    b: f64,
    quad_tol: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; targets.len()];
    let mut above: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] > anchor).collect();
    let mut below: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] < anchor).collect();
    above.sort_by(|&i, &j| targets[i].total_cmp(&targets[j]));
    below.sort_by(|&i, &j| targets[j].total_cmp(&targets[i]));
    for order in [above, below] {
        let mut prev = anchor;
        let mut acc = 0.0;
        for i in order {
            acc += inv_lambda_integral(curve, prev, targets[i], y0, b, quad_tol)?;
            prev = targets[i];
            out[i] = acc;
        }
    }
    Ok(out)
}

fn closed_form(a: f64, exponent: f64, anchor_value: f64, integral: f64) -> f64 {
    ((a + exponent * anchor_value) * (-exponent * integral).exp() - a) / exponent
}

/// Upper branch `h(y)` for `y > y₀ + δ`, anchored at `h(y₁) = α`.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_upper<C: LambdaCurve + ?Sized>(
    curve: &C,
    coef: &CoefficientPair,
    y0: f64,
    y1: f64,
    alpha: f64,
    points: &[f64],
    excision: f64,
    quad_tol: f64,
) -> Result<Vec<f64>> {
    if let Some(&y) = points.iter().find(|&&y| !(y >= y0 + excision)) {
        return Err(Error::ExcisionBand {
            y,
            y0,
            half_width: excision,
        });
    }
    if !(y1 > y0) {
        return Err(Error::Constraint(format!("y1 = {y1} must exceed y0 = {y0}")));
    }
    let ints = chained_integrals(curve, y1, points, y0, coef.b, quad_tol)?;
    Ok(points
        .iter()
        .zip(&ints)
        .map(|(y, i)| {
            if *y == y1 {
                alpha
            } else {
                closed_form(coef.a, coef.b, alpha, *i)
            }
        })
        .collect())
}

/// Outcome of the `α₂` extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub alpha2: f64,
    /// Halvings performed before the extrapolants settled.
    pub halvings: usize,
    /// Relative change between the last two extrapolants.
    pub rel_change: f64,
    pub t0: f64,
}

/// `α₂ = −(lim_{t→0} (A + Bα) exp(B(∫_{y₂}^{y₀−t} − ∫_{y₁}^{y₀+t}) 1/λ) + A) / B`.
///
/// The logarithmic divergences of the two integrals cancel. What is left,
/// `E(t)`, has an expansion in odd powers of `t`, so the tableau removes
/// `t` and then `t³`. The sequence is declared converged when two
/// successive extrapolants of `E` differ by less than `rel_tol`, which is
/// the relative change of the limit factor `exp(E)`.
#[allow(clippy::too_many_arguments)]
pub fn alpha2_limit<C: LambdaCurve + ?Sized>(
    curve: &C,
    coef: &CoefficientPair,
    y0: f64,
    y1: f64,
    y2: f64,
    alpha: f64,
    opts: &LimitOptions,
    quad_tol: f64,
) -> Result<LimitReport> {
    alpha2_limit_with_exponent(curve, coef, coef.b, y0, y1, y2, alpha, opts, quad_tol)
}

#[allow(clippy::too_many_arguments)]
fn alpha2_limit_with_exponent<C: LambdaCurve + ?Sized>(
    curve: &C,
    coef: &CoefficientPair,
    exponent: f64,
    y0: f64,
    y1: f64,
    y2: f64,
    alpha: f64,
    opts: &LimitOptions,
    quad_tol: f64,
) -> Result<LimitReport> {
    if !(y2 < y0 && y0 < y1) {
        return Err(Error::Constraint(format!(
            "alpha2 limit needs y2 < y0 < y1 (got {y2}, {y0}, {y1})"
        )));
    }
    let t0 = opts.t0_fraction * (y1 - y0).min(y0 - y2);
    let b = coef.b;
    let mut t = t0;
    let mut low = inv_lambda_integral(curve, y2, y0 - t, y0, b, quad_tol)?;
    let mut up = inv_lambda_integral(curve, y1, y0 + t, y0, b, quad_tol)?;
    let mut e_prev = exponent * (low - up);
    let mut r1_prev: Option<f64> = None;
    let mut r2_prev: Option<f64> = None;
    let mut rel_change = f64::INFINITY;
    for k in 1..=opts.halvings {
        let t_next = 0.5 * t;
        low += inv_lambda_integral(curve, y0 - t, y0 - t_next, y0, b, quad_tol)?;
        up += inv_lambda_integral(curve, y0 + t, y0 + t_next, y0, b, quad_tol)?;
        t = t_next;
        let e = exponent * (low - up);
        let r1 = 2.0 * e - e_prev;
        e_prev = e;
        if let Some(r1p) = r1_prev {
            let r2 = (8.0 * r1 - r1p) / 7.0;
            if let Some(r2p) = r2_prev {
                rel_change = (r2 - r2p).abs();
                if rel_change < opts.rel_tol {
                    let s = (coef.a + exponent * alpha) * r2.exp();
                    return Ok(LimitReport {
                        alpha2: -(s + coef.a) / exponent,
                        halvings: k,
                        rel_change,
                        t0,
                    });
                }
            }
            r2_prev = Some(r2);
        }
        r1_prev = Some(r1);
    }
    Err(Error::LimitFailure {
        halvings: opts.halvings,
        rel_change,
    })
}

/// One-sided slopes of `h` at `y₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeMatch {
    pub t: f64,
    /// Raw quotients `(h(y₀+t) − h(y₀))/t` and `(h(y₀) − h(y₀−t))/t`.
    pub right_raw: f64,
    pub left_raw: f64,
    /// The same quotients extrapolated to `t → 0` from `t, t/2, t/4`.
    pub right: f64,
    pub left: f64,
}

impl DerivativeMatch {
    pub fn gap(&self) -> f64 {
        (self.right - self.left).abs()
    }
}

/// A closed-form solution bound to a `λ` curve: both anchors, `α₂` and
/// the excision half-width are fixed, so `h` can be evaluated anywhere in
/// the curve's domain.
pub struct Reconstructor<'a, C: ?Sized> {
    curve: &'a C,
    coef: CoefficientPair,
    exponent: f64,
    y0: f64,
    y1: f64,
    alpha: f64,
    y2: f64,
    limit: LimitReport,
    excision: f64,
    constraints: ConstraintSet,
    opts: ReconstructionOptions,
}

impl<'a, C: LambdaCurve + ?Sized> Reconstructor<'a, C> {
    /// `span` is the interval the solution will be tabulated on; it fixes
    /// the excision half-width and the default anchors.
    pub fn new(
        curve: &'a C,
        coef: CoefficientPair,
        y0: f64,
        constraints: ConstraintSet,
        span: (f64, f64),
        opts: ReconstructionOptions,
    ) -> Result<Self> {
        if !(span.0 < y0 && y0 < span.1) {
            return Err(Error::Invalid(format!(
                "reconstruction range [{}, {}] must contain y0 = {y0} in its interior",
                span.0, span.1
            )));
        }
        if !(opts.excision_fraction > 0.0 && opts.quad_tol > 0.0) {
            return Err(Error::Config(
                "excision fraction and quadrature tolerance must be positive".into(),
            ));
        }
        if !(coef.b != 0.0 && coef.b.is_finite()) {
            return Err(Error::Homoscedastic { b: coef.b, floor: 0.0 });
        }
        constraints.validate(y0, &coef)?;
        let excision = opts.excision_fraction * (span.1 - span.0);
        match constraints {
            ConstraintSet::Canonical { y1, alpha } => {
                Self::canonical(curve, coef, y0, y1, alpha, span, constraints, excision, opts)
            }
            _ => {
                // Solve for the canonical pair that reproduces the target:
                // with h = a·h̃ + b and h̃ normalised by A = 0, α = 1, the
                // implied coefficients are A' = −b·B and α' = a + b.
                let y1 = opts.anchor_y1.unwrap_or(y0 + 0.5 * (span.1 - y0));
                let unit = CoefficientPair { a: 0.0, b: coef.b };
                let reference = Self::canonical(
                    curve,
                    unit,
                    y0,
                    y1,
                    1.0,
                    span,
                    ConstraintSet::Canonical { y1, alpha: 1.0 },
                    excision,
                    opts,
                )?;
                let (a, b) = reference.affine_for(&constraints)?;
                let implied = CoefficientPair {
                    a: -b * coef.b,
                    b: coef.b,
                };
                Self::canonical(curve, implied, y0, y1, a + b, span, constraints, excision, opts)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn canonical(
        curve: &'a C,
        coef: CoefficientPair,
        y0: f64,
        y1: f64,
        alpha: f64,
        span: (f64, f64),
        constraints: ConstraintSet,
        excision: f64,
        opts: ReconstructionOptions,
    ) -> Result<Self> {
        if !(y1 > y0) {
            return Err(Error::Constraint(format!("y1 = {y1} must exceed y0 = {y0}")));
        }
        let exponent = opts.exponent.unwrap_or(coef.b);
        let y2 = match opts.y2 {
            Some(y2) => y2,
            None => {
                let mirror = y0 - (y1 - y0);
                let lo = curve.domain().0.max(span.0);
                if mirror >= lo {
                    mirror
                } else {
                    0.5 * (lo + y0)
                }
            }
        };
        let limit = alpha2_limit_with_exponent(curve, &coef, exponent, y0, y1, y2, alpha, &opts.limit, opts.quad_tol)?;
        Ok(Self {
            curve,
            coef,
            exponent,
            y0,
            y1,
            alpha,
            y2,
            limit,
            excision,
            constraints,
            opts,
        })
    }

    pub fn coefficients(&self) -> CoefficientPair {
        self.coef
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn alpha2(&self) -> f64 {
        self.limit.alpha2
    }

    pub fn limit(&self) -> &LimitReport {
        &self.limit
    }

    pub fn excision(&self) -> f64 {
        self.excision
    }

    /// `h(y₀) = −A/B`.
    pub fn location(&self) -> f64 {
        -self.coef.a / self.exponent
    }

    /// Closed-form values at arbitrary points (no band interpolation).
    pub fn eval_many(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let upper: Vec<f64> = ys.iter().copied().filter(|y| *y > self.y0).collect();
        let lower: Vec<f64> = ys.iter().copied().filter(|y| *y < self.y0).collect();
        let iu = chained_integrals(self.curve, self.y1, &upper, self.y0, self.coef.b, self.opts.quad_tol)?;
        let il = chained_integrals(self.curve, self.y2, &lower, self.y0, self.coef.b, self.opts.quad_tol)?;
        let (mut ku, mut kl) = (0, 0);
        let mut out = Vec::with_capacity(ys.len());
        for &y in ys {
            if y > self.y0 {
                out.push(if y == self.y1 {
                    self.alpha
                } else {
                    closed_form(self.coef.a, self.exponent, self.alpha, iu[ku])
                });
                ku += 1;
            } else if y < self.y0 {
                out.push(if y == self.y2 {
                    self.limit.alpha2
                } else {
                    closed_form(self.coef.a, self.exponent, self.limit.alpha2, il[kl])
                });
                kl += 1;
            } else {
                out.push(self.location());
            }
        }
        Ok(out)
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        Ok(self.eval_many(&[y])?[0])
    }

    /// `h'(y) = −(A + B h(y)) / λ(y)` at a point off the root.
    pub fn slope(&self, y: f64, h: f64) -> Result<f64> {
        let l = self.curve.eval(y)?;
        if l == 0.0 {
            return Err(Error::Singularity {
                at: y,
                reason: "lambda vanishes".into(),
            });
        }
        Ok(-(self.coef.a + self.coef.b * h) / l)
    }

    /// The affine map `(a, b)` sending this solution to one satisfying
    /// `target`.
    pub fn affine_for(&self, target: &ConstraintSet) -> Result<(f64, f64)> {
        let (a, b) = match *target {
            ConstraintSet::Canonical { y1, alpha } => {
                let loc = self.location();
                let h1 = self.eval(y1)?;
                let a = (alpha - loc) / (h1 - loc);
                // Location is kept: −A/B of the current solution.
                (a, loc - a * loc)
            }
            ConstraintSet::TwoPoint {
                ya,
                yb,
                alpha_a,
                alpha_b,
            } => {
                let h = self.eval_many(&[ya, yb])?;
                let denom = h[1] - h[0];
                if !(denom.abs() > 0.0) {
                    return Err(Error::Constraint(format!(
                        "h({ya}) and h({yb}) coincide; two-point remap is degenerate"
                    )));
                }
                let a = (alpha_b - alpha_a) / denom;
                (a, alpha_a - a * h[0])
            }
            ConstraintSet::PointSlope { ya, alpha_a, slope } => {
                if (ya - self.y0).abs() < self.excision {
                    return Err(Error::ExcisionBand {
                        y: ya,
                        y0: self.y0,
                        half_width: self.excision,
                    });
                }
                let h = self.eval(ya)?;
                let d = self.slope(ya, h)?;
                if !(d > 0.0) {
                    return Err(Error::Constraint(format!(
                        "reconstructed slope at {ya} is {d}; point-plus-slope remap is degenerate"
                    )));
                }
                let a = slope / d;
                (a, alpha_a - a * h)
            }
        };
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Constraint(format!(
                "constraint remap needs a positive finite scale, got {a}"
            )));
        }
        Ok((a, b))
    }

    /// Values of this solution mapped onto `target`.
    pub fn remap(&self, values: &[f64], target: &ConstraintSet) -> Result<Vec<f64>> {
        target.validate(self.y0, &self.coef)?;
        let (a, b) = self.affine_for(target)?;
        Ok(values.iter().map(|v| a * v + b).collect())
    }

    fn matching(&self) -> Result<DerivativeMatch> {
        let t = self.excision;
        let loc = self.location();
        let pts = [
            self.y0 + t,
            self.y0 + 0.5 * t,
            self.y0 + 0.25 * t,
            self.y0 - t,
            self.y0 - 0.5 * t,
            self.y0 - 0.25 * t,
        ];
        let h = self.eval_many(&pts)?;
        let q = |k: usize, s: f64, sign: f64| sign * (h[k] - loc) / s;
        let extrapolate = |q0: f64, q1: f64, q2: f64| {
            let r1a = 2.0 * q1 - q0;
            let r1b = 2.0 * q2 - q1;
            (4.0 * r1b - r1a) / 3.0
        };
        let right = [q(0, t, 1.0), q(1, 0.5 * t, 1.0), q(2, 0.25 * t, 1.0)];
        let left = [q(3, t, -1.0), q(4, 0.5 * t, -1.0), q(5, 0.25 * t, -1.0)];
        Ok(DerivativeMatch {
            t,
            right_raw: right[0],
            left_raw: left[0],
            right: extrapolate(right[0], right[1], right[2]),
            left: extrapolate(left[0], left[1], left[2]),
        })
    }

    /// Evaluates the solution on `grid`, fills the excision band, computes
    /// residuals and checks monotonicity.
    pub fn tabulate(&self, grid: &[f64]) -> Result<ReconstructedTransform> {
        if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid(
                "reconstruction grid must be strictly increasing with at least 3 points".into(),
            ));
        }
        let y0 = self.y0;
        let d = self.excision;
        let kind: Vec<Side> = grid
            .iter()
            .map(|&y| {
                if y >= y0 + d {
                    Side::Upper
                } else if y <= y0 - d {
                    Side::Lower
                } else {
                    Side::Band
                }
            })
            .collect();
        let direct: Vec<f64> = grid
            .iter()
            .zip(&kind)
            .filter(|(_, k)| **k != Side::Band)
            .map(|(y, _)| *y)
            .collect();
        let direct_vals = self.eval_many(&direct)?;
        let mut values = vec![0.0; grid.len()];
        let mut interpolated = vec![false; grid.len()];
        let band: Vec<usize> = (0..grid.len()).filter(|&i| kind[i] == Side::Band).collect();
        let mut it = direct_vals.iter();
        for (i, k) in kind.iter().enumerate() {
            if *k != Side::Band {
                values[i] = *it.next().expect("one value per direct point");
            }
        }
        if !band.is_empty() {
            let edges = self.eval_many(&[y0 - d, y0 + d])?;
            let s_lo = self.slope(y0 - d, edges[0])?;
            let s_hi = self.slope(y0 + d, edges[1])?;
            let mid = (edges[1] - edges[0]) / (2.0 * d);
            let pchip = Pchip::with_slopes(
                vec![y0 - d, y0, y0 + d],
                vec![edges[0], self.location(), edges[1]],
                vec![s_lo, mid, s_hi],
            )?;
            for &i in &band {
                if grid[i] == y0 {
                    values[i] = self.location();
                } else {
                    values[i] = pchip.eval(grid[i]).expect("band lies inside the knots");
                    interpolated[i] = true;
                }
            }
        }
        let lambda: Vec<f64> = grid
            .iter()
            .zip(&kind)
            .map(|(y, k)| {
                if *k == Side::Band {
                    Ok(f64::NAN)
                } else {
                    self.curve.eval(*y)
                }
            })
            .collect::<Result<_>>()?;
        let residuals = residuals(grid, &values, &kind, &lambda, &self.coef);
        let matching = self.matching()?;

        let mut repaired = 0;
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            if !self.opts.repair {
                let k = values.windows(2).position(|w| !(w[1] > w[0])).expect("violation");
                return Err(Error::Inconsistent(format!(
                    "reconstructed h is not increasing between y = {} and y = {} ({} >= {})",
                    grid[k],
                    grid[k + 1],
                    values[k],
                    values[k + 1]
                )));
            }
            let fitted = pava_increasing(&values);
            repaired = repaired_count(&values, &fitted);
            values = fitted;
        }
        let (y1, alpha) = (self.y1, self.alpha);
        Ok(ReconstructedTransform {
            grid: grid.to_vec(),
            values,
            residuals,
            interpolated,
            y0,
            y1,
            alpha,
            y2: self.y2,
            alpha2: self.limit.alpha2,
            a: self.coef.a,
            b: self.coef.b,
            exponent: self.exponent,
            excision: d,
            constraints: self.constraints,
            limit: self.limit,
            matching,
            repaired,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Band,
    Upper,
}

/// `h'λ + A + Bh` with `h'` from a centred three-point stencil, or a
/// one-sided four-point stencil where a neighbour lies across the band.
fn residuals(grid: &[f64], values: &[f64], kind: &[Side], lambda: &[f64], coef: &CoefficientPair) -> Vec<f64> {
    let n = grid.len();
    let same = |i: usize, j: usize| kind[i] == kind[j];
    (0..n)
        .map(|k| {
            if kind[k] == Side::Band {
                return f64::NAN;
            }
            let stencil: Vec<usize> = if k > 0 && k + 1 < n && same(k, k - 1) && same(k, k + 1) {
                vec![k - 1, k, k + 1]
            } else if k + 1 < n && same(k, k + 1) {
                (k..n.min(k + 4)).take_while(|&j| same(k, j)).collect()
            } else {
                (k.saturating_sub(3)..=k).rev().take_while(|&j| same(k, j)).collect()
            };
            if stencil.len() < 2 {
                return f64::NAN;
            }
            let xs: Vec<f64> = stencil.iter().map(|&j| grid[j]).collect();
            let ys: Vec<f64> = stencil.iter().map(|&j| values[j]).collect();
            let dh = lagrange_derivative(&xs, &ys, grid[k]);
            dh * lambda[k] + coef.a + coef.b * values[k]
        })
        .collect()
}

/// `h` tabulated on a grid together with the quantities that fixed it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedTransform {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `h'λ + A + Bh` per grid point; NaN inside the excision band.
    pub residuals: Vec<f64>,
    pub interpolated: Vec<bool>,
    pub y0: f64,
    pub y1: f64,
    pub alpha: f64,
    pub y2: f64,
    pub alpha2: f64,
    pub a: f64,
    pub b: f64,
    pub exponent: f64,
    pub excision: f64,
    pub constraints: ConstraintSet,
    pub limit: LimitReport,
    pub matching: DerivativeMatch,
    /// Grid points changed by the isotonic repair.
    pub repaired: usize,
}

impl ReconstructedTransform {
    /// Largest `|residual| / (1 + |h|)` outside the band.
    pub fn max_residual_ratio(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| !r.is_nan())
            .map(|(r, h)| r.abs() / (1.0 + h.abs()))
            .fold(0.0, f64::max)
    }

    pub fn residuals_hold(&self, tol: f64) -> bool {
        self.max_residual_ratio() <= tol
    }

    pub fn repair_rate(&self) -> f64 {
        self.repaired as f64 / self.grid.len() as f64
    }

    pub fn quality_warning(&self) -> bool {
        self.repair_rate() > REPAIR_WARNING_RATE
    }

    /// Monotone cubic interpolant of the tabulated values.
    pub fn interpolant(&self) -> Result<Pchip> {
        Pchip::new(self.grid.clone(), self.values.clone())
    }

    /// Sup-norm distance to `reference` over grid points outside the band.
    pub fn sup_error<F: FnMut(f64) -> f64>(&self, mut reference: F) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .zip(&self.interpolated)
            .filter(|(_, i)| !**i)
            .map(|((y, h), _)| (h - reference(*y)).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["y", "h", "residual", "interpolated_flag"])?;
        for i in 0..self.grid.len() {
            w.write_record([
                fmt_f64(self.grid[i]),
                fmt_f64(self.values[i]),
                fmt_f64(self.residuals[i]),
                u8::from(self.interpolated[i]).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn metadata(&self) -> ReconstructionMeta {
        ReconstructionMeta {
            a: self.a,
            b: self.b,
            exponent: self.exponent,
            y0: self.y0,
            y1: self.y1,
            alpha: self.alpha,
            y2: self.y2,
            alpha2: self.alpha2,
            excision: self.excision,
            constraints: self.constraints,
            limit: self.limit,
            matching: self.matching,
            max_residual_ratio: self.max_residual_ratio(),
            residual_tol: RESIDUAL_TOL,
            repaired: self.repaired,
            quality_warning: self.quality_warning(),
        }
    }
}

/// Sidecar written next to `reconstruction.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionMeta {
    pub a: f64,
    pub b: f64,
    pub exponent: f64,
    pub y0: f64,
    pub y1: f64,
    pub alpha: f64,
    pub y2: f64,
    pub alpha2: f64,
    pub excision: f64,
    pub constraints: ConstraintSet,
    pub limit: LimitReport,
    pub matching: DerivativeMatch,
    pub max_residual_ratio: f64,
    pub residual_tol: f64,
    pub repaired: usize,
    pub quality_warning: bool,
}

/// Builds the solution for `constraints` and tabulates it on `grid`.
pub fn reconstruct_global<C: LambdaCurve + ?Sized>(
    curve: &C,
    coef: CoefficientPair,
    y0: f64,
    constraints: ConstraintSet,
    grid: &[f64],
    opts: ReconstructionOptions,
) -> Result<ReconstructedTransform> {
    let span = match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::Invalid("empty reconstruction grid".into())),
    };
    Reconstructor::new(curve, coef, y0, constraints, span, opts)?.tabulate(grid)
}

/// Values of `h_values` mapped by the affine map that takes the
/// reconstruction behind them onto `target`.
pub fn remap_constraints<C: LambdaCurve + ?Sized>(
    reconstructor: &Reconstructor<'_, C>,
    h_values: &[f64],
    target: &ConstraintSet,
) -> Result<Vec<f64>> {
    reconstructor.remap(h_values, target)
}

/// `g(x) = E[h(Y) | X = x]` and `σ(x) = sd(h(Y) | X = x)` under `model`,
/// by quadrature against the error law.
pub fn recover_g_sigma_oracle<F>(mut h: F, model: &TransformationModel, x: &[f64]) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let g = model.g.eval(x);
    let s = model.sigma.eval(x);
    if !(s > 0.0) {
        return Err(Error::Domain(format!("sigma(x) = {s} is not positive")));
    }
    let law = model.error;
    let lo = law.quantile(1e-18)?;
    let hi = law.quantile(1.0 - 1e-16)?.max(-lo);
    let lo = lo.min(-hi);
    let breaks = crate::numeric::linspace(lo, hi, 17);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_panels: 2000,
    };
    let mut hy = |e: f64| -> Result<f64> { h(model.h.inverse(g + s * e)?) };
    let mean = integrate_panels(|e| Ok(hy(e)? * law.density(e)), &breaks, &opts)?.value;
    let var = integrate_panels(
        |e| {
            let d = hy(e)? - mean;
            Ok(d * d * law.density(e))
        },
        &breaks,
        &opts,
    )?
    .value;
    Ok((mean, var.max(0.0).sqrt()))
}
