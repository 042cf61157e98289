//! Pool-adjacent-violators for nondecreasing least-squares fits.

/// Nondecreasing isotonic fit with unit weights.
///
/// Returns the fitted sequence. Exact ties from pooling are kept; callers
/// that need strict increase must handle them.
pub fn pava_increasing(values: &[f64]) -> Vec<f64> {
    // Each block: (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1.0, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].0 <= blocks[n - 1].0 {
                break;
            }
            let (m2, w2, l2) = blocks.pop().unwrap();
            let (m1, w1, l1) = blocks.pop().unwrap();
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, _, len) in blocks {
        out.extend(std::iter::repeat_n(m, len));
    }
    out
}

/// Number of positions the isotonic fit changed.
pub fn repaired_count(original: &[f64], fitted: &[f64]) -> usize {
    original
        .iter()
        .zip(fitted)
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pools_violators() {
        assert_eq!(pava_increasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(pava_increasing(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        let ok = [0.0, 1.0, 2.0];
        assert_eq!(pava_increasing(&ok), ok.to_vec());
        assert_eq!(repaired_count(&ok, &pava_increasing(&ok)), 0);
    }

    proptest! {
        #[test]
        fn fit_is_monotone_and_mean_preserving(v in prop::collection::vec(-10.0f64..10.0, 1..60)) {
            let fit = pava_increasing(&v);
            prop_assert_eq!(fit.len(), v.len());
            prop_assert!(fit.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            let s0: f64 = v.iter().sum();
            let s1: f64 = fit.iter().sum();
            prop_assert!((s0 - s1).abs() < 1e-9);
        }
    }
}
