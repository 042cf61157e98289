//! Adaptive Gauss–Kronrod quadrature on intervals and boxes.
//!
//! The 1-D driver bisects the panel with the largest error estimate until the
//! summed estimate meets `max(abs_tol, rel_tol * |I|)`. Integrands return
//! `Result` so model-level failures (a vanishing density, say) surface
//! unchanged instead of being turned into NaNs.
//!
//! Boxes of dimension up to [`MAX_TENSOR_DIM`] are integrated by nesting the
//! 1-D driver; higher dimensions fall back to seeded Monte Carlo with a
//! reported standard error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest covariate dimension integrated by nested adaptive rules.
pub const MAX_TENSOR_DIM: usize = 3;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_panels: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("integrand is not finite on [{a}, {b}]")));
    }
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err, res_abs))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (value, error, abs) = gk15(&mut f, lo, hi)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a: lo,
        b: hi,
        value,
        error,
        abs,
    });
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = abs;
    // Requests below the roundoff floor of the panels are unreachable; a
    // cancelling integrand can sit there even when |I| is tiny.
    let rel_tol = opts.rel_tol.max(100.0 * f64::EPSILON);
    loop {
        let floor = 100.0 * f64::EPSILON * total_abs;
        let tol = opts.abs_tol.max(rel_tol * total.abs()).max(floor);
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                estimate: sign * total,
                error_estimate: total_err,
                tolerance: tol,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                estimate: sign * total,
                error_estimate: total_err,
                tolerance: tol,
            });
        }
        let (v1, e1, r1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2, r2) = gk15(&mut f, mid, worst.b)?;
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += r1 + r2 - worst.abs;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            abs: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            abs: r2,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(QuadResult {
        value: sign * value,
        error,
        evaluations,
    })
}

/// Integrates over consecutive panels `[b_0, b_1], [b_1, b_2], ...`.
///
/// The tolerance is split evenly across panels.
pub fn integrate_panels<F>(mut f: F, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let panels = breaks.len().saturating_sub(1).max(1) as f64;
    let per_panel = QuadOptions {
        abs_tol: opts.abs_tol / panels,
        ..*opts
    };
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in breaks.windows(2) {
        let r = integrate(&mut f, w[0], w[1], &per_panel)?;
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    Ok(out)
}

/// Breakpoints from `start` toward `pole` that shrink geometrically.
///
/// Panels end at distance `dist(end, pole)` from the pole; every panel is
/// at most half as close to the pole as its outer edge, which keeps the
/// 15-point rule well resolved on `1/(u - pole)`-type integrands.
pub fn geometric_breaks(start: f64, end: f64, pole: f64) -> Vec<f64> {
    let d_start = (start - pole).abs();
    let d_end = (end - pole).abs();
    let mut breaks = vec![start];
    if d_end >= d_start || d_end == 0.0 {
        breaks.push(end);
        return breaks;
    }
    let side = (start - pole).signum();
    let mut d = d_start;
    while d * 0.5 > d_end {
        d *= 0.5;
        breaks.push(pole + side * d);
    }
    breaks.push(end);
    breaks
}

/// Integrates `f` over an axis-aligned box.
///
/// Dimensions up to [`MAX_TENSOR_DIM`] use nested adaptive rules; larger
/// boxes use `mc_samples` seeded Monte Carlo draws and report the standard
/// error as `error`.
pub fn integrate_box<F>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    opts: &QuadOptions,
    mc_samples: usize,
) -> Result<QuadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(Error::Invalid(format!(
            "box bounds have mismatched or zero length ({} vs {})",
            lower.len(),
            upper.len()
        )));
    }
    let dim = lower.len();
    if dim <= MAX_TENSOR_DIM {
        let mut point = vec![0.0; dim];
        nested(&mut f, lower, upper, opts, 0, &mut point)
    } else {
        monte_carlo_box(&mut f, lower, upper, mc_samples)
    }
}

fn nested<F>(
    f: &mut F,
    lower: &[f64],
    upper: &[f64],
    opts: &QuadOptions,
    axis: usize,
    point: &mut Vec<f64>,
) -> Result<QuadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let dim = lower.len();
    if axis + 1 == dim {
        return integrate(
            |t| {
                point[axis] = t;
                f(point)
            },
            lower[axis],
            upper[axis],
            opts,
        );
    }
    // Inner integrals are solved tighter so their noise does not stall the
    // outer error estimate.
    let inner = QuadOptions {
        abs_tol: opts.abs_tol * 0.1,
        rel_tol: opts.rel_tol * 0.1,
        ..*opts
    };
    let mut evaluations = 0;
    let mut inner_err = 0.0_f64;
    let outer = integrate(
        |t| {
            point[axis] = t;
            let r = nested(f, lower, upper, &inner, axis + 1, point)?;
            evaluations += r.evaluations;
            inner_err = inner_err.max(r.error);
            Ok(r.value)
        },
        lower[axis],
        upper[axis],
        opts,
    )?;
    Ok(QuadResult {
        value: outer.value,
        error: outer.error + inner_err * (upper[axis] - lower[axis]).abs(),
        evaluations,
    })
}

fn monte_carlo_box<F>(f: &mut F, lower: &[f64], upper: &[f64], samples: usize) -> Result<QuadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let samples = samples.max(2);
    let volume: f64 = lower.iter().zip(upper).map(|(l, u)| u - l).product();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0b0c);
    let mut point = vec![0.0; lower.len()];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..samples {
        for (p, (l, u)) in point.iter_mut().zip(lower.iter().zip(upper)) {
            *p = rng.gen_range(*l..*u);
        }
        let v = f(&point)?;
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(QuadResult {
        value: volume * mean,
        error: volume * (var / samples as f64).sqrt(),
        evaluations: samples,
    })
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = w * half;
        weights[n - 1 - i] = w * half;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok<F: Fn(f64) -> f64>(f: F) -> impl FnMut(f64) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(ok(|x| x * x * x - 2.0 * x), 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 0.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let o = QuadOptions::default();
        let fwd = integrate(ok(f64::exp), 0.0, 1.0, &o).unwrap().value;
        let back = integrate(ok(f64::exp), 1.0, 0.0, &o).unwrap().value;
        assert!((fwd - (1f64.exp() - 1.0)).abs() < 1e-13);
        assert_eq!(fwd, -back);
    }

    #[test]
    fn near_pole_log_integrand() {
        // ∫_{1e-6}^{1} du/u = -ln(1e-6)
        let o = QuadOptions::default();
        let r = integrate(ok(|u| 1.0 / u), 1e-6, 1.0, &o).unwrap();
        assert!((r.value - 1e6f64.ln()).abs() < 1e-10, "{}", r.value);
        let breaks = geometric_breaks(1.0, 1e-6, 0.0);
        assert!(breaks.windows(2).all(|w| w[1] < w[0]));
        let p = integrate_panels(ok(|u| 1.0 / u), &breaks, &o).unwrap();
        assert!((p.value + 1e6f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let r = integrate(ok(|x: f64| 1.0 / x.sqrt()), 0.0, 1.0, &QuadOptions::default());
        // 1/sqrt(0) is infinite: the rule never samples the endpoint.
        let r = r.unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x| {
                if x > 0.5 {
                    Err(Error::Domain("boom".into()))
                } else {
                    Ok(x)
                }
            },
            0.0,
            1.0,
            &QuadOptions::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let o = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_panels: 3,
        };
        let r = integrate(ok(|x: f64| (50.0 * x).sin()), 0.0, 10.0, &o);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn box_tensor_and_monte_carlo() {
        let o = QuadOptions::default();
        let r = integrate_box(|x| Ok(x[0] * x[1]), &[0.0, 0.0], &[1.0, 2.0], &o, 0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r3 = integrate_box(|x| Ok(x[0] + x[1] + x[2]), &[0.0; 3], &[1.0; 3], &o, 0).unwrap();
        assert!((r3.value - 1.5).abs() < 1e-12);
        let r5 = integrate_box(|x| Ok(x.iter().sum()), &[0.0; 5], &[1.0; 5], &o, 40_000).unwrap();
        assert!((r5.value - 2.5).abs() < 4.0 * r5.error, "{r5:?}");
        assert!(r5.error > 0.0);
    }

    #[test]
    fn gauss_legendre_matches_polynomial_moments() {
        let (x, w) = gauss_legendre(8, -1.0, 3.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        let exact = (3f64.powi(16) - 1.0) / 16.0;
        assert!((s - exact).abs() / exact < 1e-13);
        let total: f64 = w.iter().sum();
        assert!((total - 4.0).abs() < 1e-14);
        let (x1, _) = gauss_legendre(7, 0.0, 1.0);
        assert!((x1[3] - 0.5).abs() < 1e-15);
    }
}
