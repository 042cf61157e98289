//! Error laws for the transformation model.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::quadrature::{integrate, QuadOptions};

/// Tolerance on the numerically computed mean and variance.
pub const MOMENT_TOL: f64 = 1e-8;

/// A continuous error law with a strictly positive density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ErrorDistribution {
    Normal { mean: f64, sd: f64 },
    Logistic { location: f64, scale: f64 },
}

impl ErrorDistribution {
    pub fn standard_normal() -> Self {
        ErrorDistribution::Normal { mean: 0.0, sd: 1.0 }
    }

    /// Logistic law rescaled to unit variance.
    pub fn standard_logistic() -> Self {
        ErrorDistribution::Logistic {
            location: 0.0,
            scale: 3f64.sqrt() / PI,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "normal" | "gaussian" => Some(Self::standard_normal()),
            "logistic" => Some(Self::standard_logistic()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorDistribution::Normal { .. } => "normal",
            ErrorDistribution::Logistic { .. } => "logistic",
        }
    }

    pub fn density(&self, e: f64) -> f64 {
        match *self {
            ErrorDistribution::Normal { mean, sd } => {
                let z = (e - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
            ErrorDistribution::Logistic { location, scale } => {
                let z = ((e - location) / scale).abs();
                let t = (-z).exp();
                t / (scale * (1.0 + t) * (1.0 + t))
            }
        }
    }

    pub fn cdf(&self, e: f64) -> f64 {
        match *self {
            ErrorDistribution::Normal { mean, sd } => 0.5 * libm::erfc(-(e - mean) / (sd * SQRT_2)),
            ErrorDistribution::Logistic { location, scale } => {
                let z = (e - location) / scale;
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let t = z.exp();
                    t / (1.0 + t)
                }
            }
        }
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} outside (0, 1)")));
        }
        Ok(match *self {
            ErrorDistribution::Normal { mean, sd } => {
                let law = Normal::new(mean, sd).map_err(|e| Error::Domain(format!("normal law: {e}")))?;
                law.inverse_cdf(p)
            }
            ErrorDistribution::Logistic { location, scale } => location + scale * (p / (1.0 - p)).ln(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ErrorDistribution::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            ErrorDistribution::Logistic { location, scale } => {
                let u: f64 = Open01.sample(rng);
                location + scale * (u / (1.0 - u)).ln()
            }
        }
    }

    /// Half-width beyond which both tails carry less than ~1e-20 mass.
    fn effective_half_width(&self) -> f64 {
        match *self {
            ErrorDistribution::Normal { mean, sd } => mean.abs() + 10.0 * sd,
            ErrorDistribution::Logistic { location, scale } => location.abs() + 50.0 * scale,
        }
    }

    /// Total mass, mean and variance by quadrature.
    pub fn numeric_moments(&self) -> Result<(f64, f64, f64)> {
        let w = self.effective_half_width();
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_panels: 2000,
        };
        let breaks = [-w, -0.5 * w, 0.0, 0.5 * w, w];
        let mut mass = 0.0;
        let mut first = 0.0;
        for win in breaks.windows(2) {
            mass += integrate(|e| Ok(self.density(e)), win[0], win[1], &opts)?.value;
            first += integrate(|e| Ok(e * self.density(e)), win[0], win[1], &opts)?.value;
        }
        let mean = first / mass;
        let mut var = 0.0;
        for win in breaks.windows(2) {
            var += integrate(|e| Ok((e - mean) * (e - mean) * self.density(e)), win[0], win[1], &opts)?.value;
        }
        Ok((mass, mean, var / mass))
    }

    /// Checks the centring and unit-variance requirements on the error.
    pub fn validate(&self) -> Result<()> {
        let params_ok = match *self {
            ErrorDistribution::Normal { mean, sd } => mean.is_finite() && sd > 0.0,
            ErrorDistribution::Logistic { location, scale } => location.is_finite() && scale > 0.0,
        };
        if !params_ok {
            return Err(Error::Invalid(format!("invalid parameters for {self:?}")));
        }
        let (mass, mean, var) = self.numeric_moments()?;
        if (mass - 1.0).abs() > MOMENT_TOL || mean.abs() > MOMENT_TOL || (var - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Invalid(format!(
                "error law {} must have mass 1, mean 0 and variance 1; got mass {mass:.3e}, mean {mean:.3e}, variance {var:.3e}",
                self.name()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn built_in_laws_are_standardized() {
        for law in [
            ErrorDistribution::standard_normal(),
            ErrorDistribution::standard_logistic(),
        ] {
            law.validate().unwrap();
            let (mass, mean, var) = law.numeric_moments().unwrap();
            assert!((mass - 1.0).abs() < 1e-10);
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10, "{}: {var}", law.name());
        }
    }

    #[test]
    fn wrong_scale_is_rejected() {
        let bad = ErrorDistribution::Normal { mean: 0.0, sd: 2.0 };
        assert!(matches!(bad.validate(), Err(Error::Invalid(_))));
        let shifted = ErrorDistribution::Logistic {
            location: 0.1,
            scale: 3f64.sqrt() / PI,
        };
        assert!(shifted.validate().is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for law in [
            ErrorDistribution::standard_normal(),
            ErrorDistribution::standard_logistic(),
        ] {
            for p in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
                let q = law.quantile(p).unwrap();
                assert!((law.cdf(q) - p).abs() < 1e-9 * p.max(1e-3), "{} at {p}", law.name());
            }
            assert!(law.quantile(0.0).is_err());
            assert!(law.quantile(1.0).is_err());
        }
    }

    #[test]
    fn cdf_limits_and_monotone() {
        let law = ErrorDistribution::standard_logistic();
        assert!(law.cdf(-60.0) < 1e-20);
        assert!((law.cdf(60.0) - 1.0).abs() < 1e-15);
        let mut prev = 0.0;
        for k in -100..=100 {
            let v = law.cdf(k as f64 * 0.1);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let law = ErrorDistribution::standard_normal();
        let a: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..5).map(|_| law.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..5).map(|_| law.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }
}
