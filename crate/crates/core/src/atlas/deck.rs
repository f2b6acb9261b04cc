use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::chart::norm;
use crate::error::{GeometryError, Result};

/// The cyclic group generated by `x ↦ λx` acting on `ℝ^{n+1} \ {0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckGroup {
    scalar: f64,
    ambient_dim: usize,
}

impl DeckGroup {
    pub fn new(scalar: f64, ambient_dim: usize) -> Result<Self> {
        if !(scalar > 1.0 && scalar.is_finite()) {
            return Err(GeometryError::InvalidDeckScalar(scalar));
        }
        if ambient_dim == 0 {
            return Err(GeometryError::InvalidDimension(0));
        }
        Ok(Self {
            scalar,
            ambient_dim,
        })
    }

    /// The generator `e^{2π}·Id` of the standard Hopf quotient.
    pub fn standard(ambient_dim: usize) -> Self {
        Self {
            scalar: (2.0 * PI).exp(),
            ambient_dim,
        }
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// `φ_a(x) = λ^a x`.
    pub fn act(&self, a: i32, x: &[f64]) -> Vec<f64> {
        let f = self.scalar.powi(a);
        x.iter().map(|v| v * f).collect()
    }

    pub fn generator(&self, x: &[f64]) -> Vec<f64> {
        self.act(1, x)
    }

    /// Radii `(1, λ)` of the fundamental shell.
    pub fn fundamental_annulus(&self) -> (f64, f64) {
        (1.0, self.scalar)
    }

    /// The covering `x ↦ (x/|x|, 2π log|x| / log λ mod 2π)`, which for `λ = e^{2π}` is
    /// `(x/|x|, log|x| mod 2π)`.
    pub fn covering_point(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let r = norm(x);
        if r == 0.0 || !r.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        let angle = (TAU * r.ln() / self.scalar.ln()).rem_euclid(TAU);
        Ok((x.iter().map(|v| v / r).collect(), angle))
    }

    /// Largest deviation of `|λu| - λ` over unit vectors `u`: the generator carries the
    /// inner boundary sphere onto the outer one.
    pub fn boundary_defect(&self, units: &[DVector<f64>]) -> f64 {
        let (inner, outer) = self.fundamental_annulus();
        units
            .iter()
            .map(|u| {
                let u = u.normalize() * inner;
                let img = self.generator(u.as_slice());
                (norm(&img) - outer).abs() / outer
            })
            .fold(0.0, f64::max)
    }
}

/// The Hopf covering `ℝ^{n+1} \ {0} → Sⁿ × S¹`, `x ↦ (x/|x|, log|x| mod 2π)`.
pub fn hopf_covering_point(x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let r = norm(x);
    if r == 0.0 || !r.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    Ok((x.iter().map(|v| v / r).collect(), r.ln().rem_euclid(TAU)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }

    #[test]
    fn covering_examples() {
        let (u, a) = hopf_covering_point(&[1.0, 0.0]).unwrap();
        assert_eq!(u, vec![1.0, 0.0]);
        assert_eq!(a, 0.0);

        let (u, a) = hopf_covering_point(&[(2.0 * PI).exp(), 0.0]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-15 && u[1] == 0.0);
        assert!(circle_dist(a, 0.0) < 1e-12);

        let (u, a) = hopf_covering_point(&[0.0, PI.exp()]).unwrap();
        assert_eq!(u, vec![0.0, 1.0]);
        assert!((a - PI).abs() < 1e-12);

        assert_eq!(
            hopf_covering_point(&[0.0, 0.0]),
            Err(GeometryError::ZeroVector)
        );
    }

    #[test]
    fn deck_scalar_must_exceed_one() {
        assert!(DeckGroup::new(1.0, 2).is_err());
        assert!(DeckGroup::new(0.5, 2).is_err());
        let d = DeckGroup::new(3.0, 2).unwrap();
        assert_eq!(d.fundamental_annulus(), (1.0, 3.0));
    }

    #[test]
    fn standard_generator_matches_covering() {
        let d = DeckGroup::standard(3);
        let x = [0.4, -1.3, 2.2];
        let (u1, a1) = d.covering_point(&x).unwrap();
        let (u2, a2) = hopf_covering_point(&x).unwrap();
        assert!(circle_dist(a1, a2) < 1e-12);
        for (p, q) in u1.iter().zip(&u2) {
            assert!((p - q).abs() < 1e-15);
        }
    }
}
