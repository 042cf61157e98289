//! Numerical building blocks: quadrature, roots, interpolation, isotonic fits.

pub mod interp;
pub mod isotonic;
pub mod quadrature;
pub mod roots;

use crate::error::{Error, Result};

/// Derivative estimate with its Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

/// Centered-difference derivative refined by Richardson extrapolation.
///
/// Steps are `h, h/2, ..., h/2^(levels-1)`; the tableau eliminates the even
/// powers of the step. The returned error is the difference between the two
/// highest-order entries.
pub fn richardson_derivative<F>(mut f: F, x: f64, h: f64, levels: usize) -> Result<Derivative>
where
    F: FnMut(f64) -> Result<f64>,
{
    let levels = levels.max(2);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut step = h;
    for k in 0..levels {
        let d = (f(x + step)? - f(x - step)?) / (2.0 * step);
        if !d.is_finite() {
            return Err(Error::Singularity {
                at: x,
                reason: format!("non-finite difference quotient with step {step:e}"),
            });
        }
        let mut row = vec![d];
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= 4.0;
            let prev = row[j - 1];
            row.push(prev + (prev - table[k - 1][j - 1]) / (factor - 1.0));
        }
        table.push(row);
        step *= 0.5;
    }
    let last = &table[levels - 1];
    let value = last[levels - 1];
    let error = (value - last[levels - 2]).abs();
    Ok(Derivative { value, error })
}

/// Derivative at `at` of the polynomial through `(xs[j], ys[j])`.
pub fn lagrange_derivative(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        let mut dl = 0.0;
        for i in 0..n {
            if i == j {
                continue;
            }
            let mut term = 1.0 / (xs[j] - xs[i]);
            for m in 0..n {
                if m != i && m != j {
                    term *= (at - xs[m]) / (xs[j] - xs[m]);
                }
            }
            dl += term;
        }
        total += ys[j] * dl;
    }
    total
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let p = p.clamp(0.0, 1.0);
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Median of an unsorted slice (NaNs excluded); `None` if nothing remains.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

/// `n` equally spaced points on `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect()
        }
    }
}
