use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadrature::{integrate_box, QuadOptions, QuadResult};

/// Uniform weight on an axis-aligned box.
///
/// `v(x) = mass / volume` inside the box and 0 outside, so `∫ v = mass`.
/// On the unit cube with unit mass this is `v ≡ 1`. `coord` selects the
/// covariate whose partial derivative enters `λ̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    lower: Vec<f64>,
    upper: Vec<f64>,
    coord: usize,
    mass: f64,
}

impl WeightFunction {
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, coord: usize) -> Result<Self> {
        Self::with_mass(lower, upper, coord, 1.0)
    }

    pub fn with_mass(lower: Vec<f64>, upper: Vec<f64>, coord: usize, mass: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Invalid(format!(
                "weight box needs matching non-empty bounds ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && u > l))
        {
            return Err(Error::Invalid("weight box must have finite positive width".into()));
        }
        if coord >= lower.len() {
            return Err(Error::Index {
                index: coord,
                dim: lower.len(),
            });
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Invalid("weight mass must be positive and finite".into()));
        }
        Ok(Self {
            lower,
            upper,
            coord,
            mass,
        })
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self::uniform(vec![0.0; dim], vec![1.0; dim], 0).expect("unit cube is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn coord(&self) -> usize {
        self.coord
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Constant density value inside the box.
    pub fn density(&self) -> f64 {
        self.mass / self.volume()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            self.density()
        } else {
            0.0
        }
    }

    pub fn with_coord(&self, coord: usize) -> Result<Self> {
        Self::with_mass(self.lower.clone(), self.upper.clone(), coord, self.mass)
    }

    /// `∫ v(x) f(x) dx` over the support.
    pub fn integrate<F>(&self, f: F, opts: &QuadOptions, mc_samples: usize) -> Result<QuadResult>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let mut f = f;
        let dens = self.density();
        integrate_box(|x| Ok(dens * f(x)?), &self.lower, &self.upper, opts, mc_samples)
    }

    /// Tensor grid of `k` points per axis (corners included); for more than
    /// three axes only the corners and the centre.
    pub fn probe_points(&self, k: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let k = k.max(2);
        if d > 3 {
            let mut pts = Vec::new();
            for mask in 0..(1usize << d) {
                pts.push(
                    (0..d)
                        .map(|j| {
                            if mask >> j & 1 == 1 {
                                self.upper[j]
                            } else {
                                self.lower[j]
                            }
                        })
                        .collect(),
                );
            }
            pts.push((0..d).map(|j| 0.5 * (self.lower[j] + self.upper[j])).collect());
            return pts;
        }
        let mut pts = vec![Vec::new()];
        for j in 0..d {
            let mut next = Vec::new();
            for p in &pts {
                for i in 0..k {
                    let t = i as f64 / (k - 1) as f64;
                    let mut q = p.clone();
                    q.push(self.lower[j] + t * (self.upper[j] - self.lower[j]));
                    next.push(q);
                }
            }
            pts = next;
        }
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_has_unit_density() {
        let w = WeightFunction::unit_cube(2);
        assert_eq!(w.eval(&[0.5, 0.5]), 1.0);
        assert_eq!(w.eval(&[1.5, 0.5]), 0.0);
        let r = w.integrate(|_| Ok(1.0), &QuadOptions::default(), 0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mass_is_preserved_on_other_boxes() {
        let w = WeightFunction::uniform(vec![0.2], vec![0.8], 0).unwrap();
        assert!((w.density() - 1.0 / 0.6).abs() < 1e-14);
        let r = w.integrate(|x| Ok(x[0]), &QuadOptions::default(), 0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(WeightFunction::uniform(vec![1.0], vec![1.0], 0).is_err());
        assert!(WeightFunction::uniform(vec![0.0], vec![1.0], 1).is_err());
        assert!(WeightFunction::with_mass(vec![0.0], vec![1.0], 0, 0.0).is_err());
    }

    #[test]
    fn probes_cover_corners() {
        let w = WeightFunction::unit_cube(2);
        let p = w.probe_points(3);
        assert_eq!(p.len(), 9);
        assert!(p.contains(&vec![1.0, 1.0]));
        assert_eq!(WeightFunction::unit_cube(4).probe_points(3).len(), 17);
    }
}
