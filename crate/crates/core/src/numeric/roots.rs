//! Bracketed root finding and sign-change scanning.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Bisection with Illinois-style secant steps.
///
/// The bracket `[a, b]` must carry a sign change. Every iteration keeps a
/// valid bracket; a secant candidate is accepted only when it lands strictly
/// inside, otherwise the midpoint is used. Two consecutive secant steps that
/// fail to halve the bracket force a bisection.
pub fn bracketed_root<F>(mut f: F, a: f64, b: f64, opts: &RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracketing {
            lower: lo,
            upper: hi,
            f_lower: f_lo,
            f_upper: f_hi,
        });
    }
    // Illinois weights on the retained endpoint.
    let mut w_lo = 1.0;
    let mut w_hi = 1.0;
    let mut last_side = 0i8;
    let mut stalled = 0;
    for _ in 0..opts.max_iter {
        let width = hi - lo;
        if width <= opts.x_tol {
            break;
        }
        let secant = (lo * w_hi * f_hi - hi * w_lo * f_lo) / (w_hi * f_hi - w_lo * f_lo);
        let x = if stalled < 2 && secant > lo && secant < hi && secant.is_finite() {
            secant
        } else {
            stalled = 0;
            0.5 * (lo + hi)
        };
        let fx = f(x)?;
        if !fx.is_finite() {
            return Err(Error::NonFinite(format!("root function at {x}")));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            w_lo = 1.0;
            if last_side == -1 {
                w_hi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            f_hi = fx;
            w_hi = 1.0;
            if last_side == 1 {
                w_lo *= 0.5;
            }
            last_side = 1;
        }
        if hi - lo > 0.5 * width {
            stalled += 1;
        } else {
            stalled = 0;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// Indices `k` such that `values[k]` and `values[k + 1]` have opposite
/// signs, or `values[k]` is exactly zero.
pub fn sign_changes(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for k in 0..values.len() {
        let crosses = k + 1 < values.len() && values[k + 1] != 0.0 && values[k].signum() != values[k + 1].signum();
        if values[k] == 0.0 || crosses {
            out.push(k);
        }
    }
    out
}

/// Among several crossing locations, picks the one closest to their median.
///
/// Ties go to the smaller index. Returns `None` for an empty slice.
pub fn median_crossing(locations: &[f64]) -> Option<usize> {
    if locations.is_empty() {
        return None;
    }
    let mut sorted = locations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    locations
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - median).abs().total_cmp(&(*b - median).abs()))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let o = RootOptions::default();
        let r = bracketed_root(|x| Ok(-x), -1.0, 1.0, &o).unwrap();
        assert_eq!(r, 0.0);
        let r = bracketed_root(|x| Ok(x * x - 2.0), 0.0, 3.0, &o).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let r = bracketed_root(|x: f64| Ok(0.5 + x.sinh()), -3.0, 3.0, &o).unwrap();
        assert!((r - (-0.5f64).asinh()).abs() < 1e-12);
    }

    #[test]
    fn flat_function_still_converges() {
        // x^9 is extremely flat near 0; the Illinois weights prevent stalling.
        let o = RootOptions {
            x_tol: 1e-14,
            max_iter: 400,
        };
        let r = bracketed_root(|x: f64| Ok(x.powi(9)), -1.0, 2.0, &o).unwrap();
        assert!(r.abs() < 1e-2);
        let r = bracketed_root(|x: f64| Ok((x - 0.3).powi(3)), -1.0, 2.0, &o).unwrap();
        assert!((r - 0.3).abs() < 1e-5);
    }

    #[test]
    fn missing_sign_change_is_an_error() {
        let r = bracketed_root(|x| Ok(x * x + 1.0), -1.0, 1.0, &RootOptions::default());
        assert!(matches!(r, Err(Error::Bracketing { .. })));
    }

    #[test]
    fn crossing_scan_and_median_rule() {
        let v = [1.0, 0.5, -0.2, -0.1, 0.3, -0.4];
        assert_eq!(sign_changes(&v), vec![1, 3, 4]);
        assert_eq!(sign_changes(&[1.0, 0.0, -1.0]), vec![1]);
        let locs = [-2.9, 0.0, 0.5, 3.0];
        // median 0.25: both middle crossings tie, first wins.
        assert_eq!(median_crossing(&locs), Some(1));
        assert_eq!(median_crossing(&[]), None);
    }
}
