//! Fixed-step integration of the identifying equation and numerical checks
//! of the Gronwall bound and of solution uniqueness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{CoefficientPair, LambdaCurve};

/// Deviation below which a uniqueness probe counts as consistent.
pub const UNIQUENESS_TOL: f64 = 1e-6;
/// Slack granted to the Gronwall conclusion for discretisation error.
pub const GRONWALL_SLACK: f64 = 1e-9;
/// Smallest grid accepted by [`gronwall_check`].
pub const GRONWALL_MIN_POINTS: usize = 64;

/// `h'(y) = D(y, h)`, `h(a) = θ₀` on `[a, b]`.
pub struct IvpSpec<F> {
    pub rhs: F,
    pub a: f64,
    pub b: f64,
    pub theta0: f64,
}

impl<F: Fn(f64, f64) -> Result<f64>> IvpSpec<F> {
    pub fn new(rhs: F, a: f64, b: f64, theta0: f64) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(Error::Invalid(format!("IVP interval [{a}, {b}] is empty")));
        }
        if !(theta0 > 0.0 && theta0.is_finite()) {
            return Err(Error::Invalid(format!(
                "IVP initial value must be positive, got {theta0}"
            )));
        }
        Ok(Self { rhs, a, b, theta0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvpSolution {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl IvpSolution {
    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Classical fourth-order Runge–Kutta with `n` uniform steps.
///
/// Leaving the positive half-line is an error, as is any non-finite
/// slope.
pub fn integrate_ivp<F>(spec: &IvpSpec<F>, n: usize) -> Result<IvpSolution>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if n < 16 {
        return Err(Error::Invalid(format!("IVP needs at least 16 steps, got {n}")));
    }
    let step = (spec.b - spec.a) / n as f64;
    let f = |y: f64, h: f64| -> Result<f64> {
        let d = (spec.rhs)(y, h)?;
        if !d.is_finite() {
            return Err(Error::NonFinite(format!("right-hand side at ({y}, {h})")));
        }
        Ok(d)
    };
    let mut grid = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut h = spec.theta0;
    grid.push(spec.a);
    values.push(h);
    for k in 0..n {
        let y = spec.a + step * k as f64;
        let k1 = f(y, h)?;
        let k2 = f(y + 0.5 * step, h + 0.5 * step * k1)?;
        let k3 = f(y + 0.5 * step, h + 0.5 * step * k2)?;
        let k4 = f(y + step, h + step * k3)?;
        h += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let y_next = if k + 1 == n {
            spec.b
        } else {
            spec.a + step * (k + 1) as f64
        };
        if !(h > 0.0) {
            return Err(Error::DomainExit { at: y_next, value: h });
        }
        grid.push(y_next);
        values.push(h);
    }
    Ok(IvpSolution { grid, values })
}

/// Right-hand side `D(y, h) = −(A + B h) / λ(y)`.
pub fn identifying_rhs<'a, C: LambdaCurve + ?Sized>(
    curve: &'a C,
    coef: CoefficientPair,
) -> impl Fn(f64, f64) -> Result<f64> + 'a {
    move |y, h| {
        let l = curve.eval(y)?;
        if l == 0.0 {
            return Err(Error::Singularity {
                at: y,
                reason: "lambda vanishes".into(),
            });
        }
        Ok(-(coef.a + coef.b * h) / l)
    }
}

/// The identifying equation as an IVP on `[a, b]`, which must not contain
/// the root `y₀`.
pub fn identifying_ivp<'a, C: LambdaCurve + ?Sized>(
    curve: &'a C,
    coef: CoefficientPair,
    y0: f64,
    a: f64,
    b: f64,
    theta0: f64,
) -> Result<IvpSpec<impl Fn(f64, f64) -> Result<f64> + 'a>> {
    if a <= y0 && y0 <= b {
        return Err(Error::Singularity {
            at: y0,
            reason: format!("interval [{a}, {b}] contains the pole of 1/lambda"),
        });
    }
    IvpSpec::new(identifying_rhs(curve, coef), a, b, theta0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub steps: usize,
    /// `N` against `2N` steps at the common nodes.
    pub refinement: f64,
    /// `N` steps against a restart from the midpoint value.
    pub restart: f64,
    pub max_deviation: f64,
    pub consistent: bool,
}

/// Integrates with `n` and `2n` steps and, separately, to the midpoint and
/// from there again with `n` steps per half; reports the largest pairwise
/// gap on the coarse nodes.
pub fn uniqueness_probe<F>(spec: &IvpSpec<F>, n: usize) -> Result<UniquenessReport>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let n = n + n % 2;
    let coarse = integrate_ivp(spec, n)?;
    let fine = integrate_ivp(spec, 2 * n)?;
    let refinement = (0..=n)
        .map(|k| (coarse.values[k] - fine.values[2 * k]).abs())
        .fold(0.0, f64::max);
    let mid = 0.5 * (spec.a + spec.b);
    let first = integrate_ivp(
        &IvpSpec {
            rhs: &spec.rhs,
            a: spec.a,
            b: mid,
            theta0: spec.theta0,
        },
        n,
    )?;
    let second = integrate_ivp(
        &IvpSpec {
            rhs: &spec.rhs,
            a: mid,
            b: spec.b,
            theta0: first.last(),
        },
        n,
    )?;
    // The halves run at twice the coarse resolution: coarse node k sits at
    // half-node 2k (first half) or 2k − n (second half).
    let restart = (0..=n)
        .map(|k| {
            let v = if k <= n / 2 {
                first.values[2 * k]
            } else {
                second.values[2 * k - n]
            };
            (coarse.values[k] - v).abs()
        })
        .fold(0.0, f64::max);
    let max_deviation = refinement.max(restart);
    Ok(UniquenessReport {
        steps: n,
        refinement,
        restart,
        max_deviation,
        consistent: max_deviation <= UNIQUENESS_TOL,
    })
}

/// `u ≤ v + ∫ q u` on `[a, b]`.
pub struct GronwallInstance<U, V, Q> {
    pub a: f64,
    pub b: f64,
    pub u: U,
    pub v: V,
    pub q: Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GronwallVerdict {
    HypothesisHoldsAndConclusionHolds,
    HypothesisFails,
    ConclusionViolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallOutcome {
    pub verdict: GronwallVerdict,
    /// Largest `u − bound` over the grid (negative when the bound is strict).
    pub worst_excess: f64,
}

/// Checks the hypothesis pointwise with trapezoidal integrals and, when it
/// holds, the conclusion `u ≤ v + ∫_a^y v q exp(∫_z^y q) dz`.
pub fn gronwall_check<U, V, Q>(inst: &GronwallInstance<U, V, Q>, points: usize) -> Result<GronwallOutcome>
where
    U: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    if points < GRONWALL_MIN_POINTS {
        return Err(Error::Invalid(format!(
            "Gronwall check needs at least {GRONWALL_MIN_POINTS} points, got {points}"
        )));
    }
    if !(inst.a < inst.b) {
        return Err(Error::Invalid(format!("empty interval [{}, {}]", inst.a, inst.b)));
    }
    let ys = crate::numeric::linspace(inst.a, inst.b, points);
    let u: Vec<f64> = ys.iter().map(|y| (inst.u)(*y)).collect();
    let v: Vec<f64> = ys.iter().map(|y| (inst.v)(*y)).collect();
    let q: Vec<f64> = ys.iter().map(|y| (inst.q)(*y)).collect();
    for (name, vals) in [("u", &u), ("v", &v), ("q", &q)] {
        if let Some(k) = vals.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{name} at y = {}", ys[k])));
        }
    }
    if let Some(k) = q.iter().position(|x| *x < 0.0) {
        return Err(Error::Invalid(format!(
            "q must be nonnegative; q({}) = {}",
            ys[k], q[k]
        )));
    }
    let qu: Vec<f64> = q.iter().zip(&u).map(|(a, b)| a * b).collect();
    let int_qu = cumulative_trapezoid(&ys, &qu);
    if (0..points).any(|i| u[i] > v[i] + int_qu[i]) {
        return Ok(GronwallOutcome {
            verdict: GronwallVerdict::HypothesisFails,
            worst_excess: (0..points)
                .map(|i| u[i] - v[i] - int_qu[i])
                .fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let big_q = cumulative_trapezoid(&ys, &q);
    let weighted: Vec<f64> = (0..points).map(|i| v[i] * q[i] * (-big_q[i]).exp()).collect();
    let s = cumulative_trapezoid(&ys, &weighted);
    let excess = (0..points)
        .map(|i| u[i] - (v[i] + big_q[i].exp() * s[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GronwallOutcome {
        verdict: if excess > GRONWALL_SLACK {
            GronwallVerdict::ConclusionViolated
        } else {
            GronwallVerdict::HypothesisHoldsAndConclusionHolds
        },
        worst_excess: excess,
    })
}

fn cumulative_trapezoid(ys: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ys.len()];
    for i in 1..ys.len() {
        out[i] = out[i - 1] + 0.5 * (ys[i] - ys[i - 1]) * (f[i] + f[i - 1]);
    }
    out
}

/// Solves `w = f + ∫_a^y q w` with the cumulative trapezoid rule.
fn trapezoid_volterra(ys: &[f64], q: &[f64], f: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; ys.len()];
    w[0] = f[0];
    let mut acc = 0.0;
    for i in 1..ys.len() {
        let h = ys[i] - ys[i - 1];
        let known = acc + 0.5 * h * q[i - 1] * w[i - 1];
        w[i] = (f[i] + known) / (1.0 - 0.5 * h * q[i]);
        acc = known + 0.5 * h * q[i] * w[i];
    }
    w
}

fn poly(coef: &[f64], y: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

fn linear_interp(ys: &[f64], vals: &[f64], y: f64) -> f64 {
    let n = ys.len();
    let k = ys.partition_point(|g| *g <= y).clamp(1, n - 1);
    let t = (y - ys[k - 1]) / (ys[k] - ys[k - 1]);
    vals[k - 1] + t * (vals[k] - vals[k - 1])
}

/// A seeded instance from the randomised suite.
///
/// `v` is a cubic and `q` the absolute value of a quadratic, both with
/// coefficients in `[−1, 1]`. On the check grid, `w` solves `w = v + ∫ q w`
/// and `E` solves `E = 1 + ∫ q E`, both in the discrete trapezoidal sense,
/// so `E` is the discrete `exp(∫_a^y q)`. With `u = w − c·E` and `c > 0`
/// the hypothesis reads `−c ≤ 0` at every node: it holds with margin `c`
/// whatever the size of `E`. `u` is piecewise linear between grid nodes.
pub struct RandomGronwall {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    v: [f64; 4],
    q: [f64; 3],
    grid: Vec<f64>,
    u: Vec<f64>,
}

impl RandomGronwall {
    pub fn generate(seed: u64, points: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(-1.0..1.0);
        let b = a + rng.gen_range(0.5..2.0);
        let mut v = [0.0; 4];
        for c in &mut v {
            *c = rng.gen_range(-1.0..1.0);
        }
        let mut q = [0.0; 3];
        for c in &mut q {
            *c = rng.gen_range(-1.0..1.0);
        }
        let margin = 10f64.powf(rng.gen_range(-3.0..-1.0));
        let grid = crate::numeric::linspace(a, b, points);
        let vv: Vec<f64> = grid.iter().map(|y| poly(&v, *y)).collect();
        let qq: Vec<f64> = grid.iter().map(|y| poly(&q, *y).abs()).collect();
        let w = trapezoid_volterra(&grid, &qq, &vv);
        let e = trapezoid_volterra(&grid, &qq, &vec![1.0; points]);
        let scale = 1.0 + w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let c = margin * scale;
        let u = w.iter().zip(&e).map(|(wi, ei)| wi - c * ei).collect();
        Self {
            seed,
            a,
            b,
            v,
            q,
            grid,
            u,
        }
    }

    pub fn check(&self) -> Result<GronwallOutcome> {
        let inst = GronwallInstance {
            a: self.a,
            b: self.b,
            u: |y: f64| linear_interp(&self.grid, &self.u, y),
            v: |y: f64| poly(&self.v, y),
            q: |y: f64| poly(&self.q, y).abs(),
        };
        gronwall_check(&inst, self.grid.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallSuiteReport {
    pub instances: usize,
    pub seed_base: u64,
    pub points: usize,
    pub holds: usize,
    pub hypothesis_fails: usize,
    pub violations: usize,
    pub failing_seeds: Vec<u64>,
    pub worst_excess: f64,
}

impl GronwallSuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.hypothesis_fails == 0
    }
}

/// Runs `count` seeded instances (seeds `seed_base + k`) in parallel.
pub fn gronwall_suite(count: usize, seed_base: u64, points: usize) -> Result<GronwallSuiteReport> {
    let outcomes: Vec<(u64, GronwallOutcome)> = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let seed = seed_base.wrapping_add(k);
            RandomGronwall::generate(seed, points).check().map(|o| (seed, o))
        })
        .collect::<Result<_>>()?;
    let mut report = GronwallSuiteReport {
        instances: count,
        seed_base,
        points,
        holds: 0,
        hypothesis_fails: 0,
        violations: 0,
        failing_seeds: Vec::new(),
        worst_excess: f64::NEG_INFINITY,
    };
    for (seed, o) in outcomes {
        match o.verdict {
            GronwallVerdict::HypothesisHoldsAndConclusionHolds => {
                report.holds += 1;
                report.worst_excess = report.worst_excess.max(o.worst_excess);
            }
            GronwallVerdict::HypothesisFails => {
                report.hypothesis_fails += 1;
                report.failing_seeds.push(seed);
            }
            GronwallVerdict::ConclusionViolated => {
                report.violations += 1;
                report.failing_seeds.push(seed);
                report.worst_excess = report.worst_excess.max(o.worst_excess);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::FnCurve;

    #[test]
    fn zero_field_is_constant() {
        let spec = IvpSpec::new(|_, _| Ok(0.0), 0.0, 1.0, 1.0).unwrap();
        let s = integrate_ivp(&spec, 32).unwrap();
        assert!(s.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn exponential_growth() {
        let spec = IvpSpec::new(|_, h| Ok(h), 0.0, 1.0, 1.0).unwrap();
        let s = integrate_ivp(&spec, 256).unwrap();
        assert!((s.last() - 1f64.exp()).abs() < 1e-8);
        assert_eq!(s.grid[256], 1.0);
    }

    #[test]
    fn step_halving_shows_fourth_order() {
        let spec = IvpSpec::new(|_, h| Ok(h), 0.0, 1.0, 1.0).unwrap();
        let e = |n| (integrate_ivp(&spec, n).unwrap().last() - 1f64.exp()).abs();
        for n in [16, 32, 64] {
            assert!(e(n) / e(2 * n) >= 12.0, "{n}: {}", e(n) / e(2 * n));
        }
    }

    #[test]
    fn leaving_positivity_is_reported() {
        let spec = IvpSpec::new(|_, _| Ok(-2.0), 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(integrate_ivp(&spec, 64), Err(Error::DomainExit { .. })));
        assert!(IvpSpec::new(|_, h| Ok(h), 0.0, 1.0, 0.0).is_err());
        assert!(integrate_ivp(&IvpSpec::new(|_, h| Ok(h), 0.0, 1.0, 1.0).unwrap(), 8).is_err());
    }

    #[test]
    fn uniqueness_for_linear_field() {
        let spec = IvpSpec::new(|_, h| Ok(h), 0.0, 1.0, 1.0).unwrap();
        let r = uniqueness_probe(&spec, 256).unwrap();
        assert!(r.max_deviation <= 1e-9, "{r:?}");
        assert!(r.consistent);
    }

    #[test]
    fn identifying_ivp_follows_closed_form() {
        // M1 normalised by A = 0: h = (y + 1/2)/(1/2) with lambda = −(1/2 + y).
        let lam = FnCurve(|y: f64| -(0.5 + y));
        let coef = CoefficientPair { a: 0.0, b: 1.0 };
        let spec = identifying_ivp(&lam, coef, -0.5, 0.0, 1.0, 1.0).unwrap();
        let s = integrate_ivp(&spec, 128).unwrap();
        for (y, h) in s.grid.iter().zip(&s.values) {
            assert!((h - 2.0 * (y + 0.5)).abs() < 1e-12);
        }
        assert!(matches!(
            identifying_ivp(&lam, coef, -0.5, -1.0, 1.0, 1.0),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn gronwall_zero_kernel() {
        let inst = GronwallInstance {
            a: 0.0,
            b: 1.0,
            u: |y: f64| y - 1.0,
            v: |y: f64| y,
            q: |_| 0.0,
        };
        let o = gronwall_check(&inst, 64).unwrap();
        assert_eq!(o.verdict, GronwallVerdict::HypothesisHoldsAndConclusionHolds);
        let zero = GronwallInstance {
            a: 0.0,
            b: 1.0,
            u: |_| 0.0,
            v: |_| 0.0,
            q: |_| 1.0,
        };
        assert_eq!(
            gronwall_check(&zero, 64).unwrap().verdict,
            GronwallVerdict::HypothesisHoldsAndConclusionHolds
        );
    }

    #[test]
    fn gronwall_rejects_bad_input() {
        let bad = GronwallInstance {
            a: 0.0,
            b: 1.0,
            u: |y: f64| y,
            v: |_| 0.0,
            q: |_| -1.0,
        };
        assert!(gronwall_check(&bad, 64).is_err());
        let nan = GronwallInstance {
            a: 0.0,
            b: 1.0,
            u: |_| f64::NAN,
            v: |_| 0.0,
            q: |_| 1.0,
        };
        assert!(matches!(gronwall_check(&nan, 64), Err(Error::NonFinite(_))));
        let coarse = GronwallInstance {
            a: 0.0,
            b: 1.0,
            u: |_| 0.0,
            v: |_| 0.0,
            q: |_| 1.0,
        };
        assert!(gronwall_check(&coarse, 63).is_err());
    }

    #[test]
    fn gronwall_flags_failed_hypothesis() {
        let inst = GronwallInstance {
            a: 0.0,
            b: 1.0,
            u: |_| 1.0,
            v: |_| 0.0,
            q: |_| 0.1,
        };
        assert_eq!(
            gronwall_check(&inst, 64).unwrap().verdict,
            GronwallVerdict::HypothesisFails
        );
    }

    #[test]
    fn random_instances_satisfy_their_hypothesis() {
        let r = gronwall_suite(50, 7, 257).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.holds, 50);
        assert!(r.worst_excess < 0.0);
    }

    #[test]
    fn suite_is_deterministic() {
        assert_eq!(
            gronwall_suite(20, 99, 129).unwrap(),
            gronwall_suite(20, 99, 129).unwrap()
        );
    }
}
