use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chart::{norm, ChartId};
use crate::error::{GeometryError, Result};

/// Where a transition map may be applied, as a predicate on source coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Everywhere,
    /// Closed box `lo_i ≤ x_i ≤ hi_i`.
    Box(Vec<(f64, f64)>),
    AxisAtLeast {
        axis: usize,
        bound: f64,
    },
    AxisBelow {
        axis: usize,
        bound: f64,
    },
    RadiusAtLeast(f64),
    RadiusBelow(f64),
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Everywhere => true,
            Region::Box(b) => {
                b.len() == x.len() && b.iter().zip(x).all(|((lo, hi), v)| lo <= v && v <= hi)
            }
            Region::AxisAtLeast { axis, bound } => x[*axis] >= *bound,
            Region::AxisBelow { axis, bound } => x[*axis] < *bound,
            Region::RadiusAtLeast(r) => norm(x) >= *r,
            Region::RadiusBelow(r) => {
                let n = norm(x);
                n < *r && n > 0.0
            }
        }
    }
}

/// `x ↦ A x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            offset: DVector::zeros(n),
        }
    }

    pub fn translation(offset: Vec<f64>) -> Self {
        let n = offset.len();
        Self {
            matrix: DMatrix::identity(n, n),
            offset: DVector::from_vec(offset),
        }
    }

    pub fn scaling(n: usize, factor: f64) -> Self {
        Self {
            matrix: DMatrix::identity(n, n) * factor,
            offset: DVector::zeros(n),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x) + &self.offset)
            .iter()
            .copied()
            .collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: &self.matrix * &other.matrix,
            offset: &self.matrix * &other.offset + &self.offset,
        }
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let inv = self.matrix.clone().try_inverse()?;
        let offset = -(&inv * &self.offset);
        Some(AffineMap {
            matrix: inv,
            offset,
        })
    }
}

/// A smooth, possibly non-affine coordinate change.
pub trait CoordinateMap: Send + Sync {
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone)]
pub enum TransitionRule {
    Affine(AffineMap),
    General(Arc<dyn CoordinateMap>),
}

impl fmt::Debug for TransitionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionRule::Affine(a) => f.debug_tuple("Affine").field(a).finish(),
            TransitionRule::General(_) => f.write_str("General(..)"),
        }
    }
}

/// The coordinate change `ψ_to ∘ ψ_from⁻¹` restricted to an overlap.
#[derive(Clone, Debug)]
pub struct TransitionMap {
    pub name: String,
    pub from: ChartId,
    pub to: ChartId,
    pub rule: TransitionRule,
    pub overlap: Region,
    /// Index of the registered inverse transition, if any.
    pub inverse: Option<usize>,
}

impl TransitionMap {
    pub fn affine(
        name: impl Into<String>,
        from: ChartId,
        to: ChartId,
        map: AffineMap,
        overlap: Region,
    ) -> Self {
        Self {
            name: name.into(),
            from,
            to,
            rule: TransitionRule::Affine(map),
            overlap,
            inverse: None,
        }
    }

    pub fn overlap_test(&self, x: &[f64]) -> bool {
        self.overlap.contains(x)
    }

    /// Applies the coordinate map without checking the overlap predicate.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        match &self.rule {
            TransitionRule::Affine(a) => a.apply(x),
            TransitionRule::General(m) => m.forward(x),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.rule {
            TransitionRule::Affine(a) => a.matrix.clone(),
            TransitionRule::General(m) => m.jacobian(x),
        }
    }

    pub fn as_affine(&self) -> Option<&AffineMap> {
        match &self.rule {
            TransitionRule::Affine(a) => Some(a),
            TransitionRule::General(_) => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.from == self.to
            && matches!(&self.rule, TransitionRule::Affine(a)
                if a.offset.iter().all(|v| *v == 0.0) && a.matrix == DMatrix::identity(a.matrix.nrows(), a.matrix.ncols()))
    }
}

/// Maps a point of the source chart into the target chart, failing outside the overlap.
pub fn transition(point: &[f64], map: &TransitionMap) -> Result<Vec<f64>> {
    if !map.overlap_test(point) {
        return Err(GeometryError::OutsideOverlap(map.name.clone()));
    }
    Ok(map.forward(point))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_inverse_round_trips() {
        let a = AffineMap {
            matrix: DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]),
            offset: DVector::from_vec(vec![-1.0, 4.0]),
        };
        let inv = a.inverse().unwrap();
        let x = [0.3, -0.8];
        let back = inv.apply(&a.apply(&x));
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
        let id = a.compose(&inv);
        assert!((id.matrix - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }

    #[test]
    fn overlap_is_enforced() {
        let t = TransitionMap::affine(
            "wrap",
            ChartId(0),
            ChartId(0),
            AffineMap::translation(vec![-1.0]),
            Region::AxisAtLeast {
                axis: 0,
                bound: 1.0,
            },
        );
        assert_eq!(transition(&[1.25], &t).unwrap(), vec![0.25]);
        assert!(matches!(
            transition(&[0.5], &t),
            Err(GeometryError::OutsideOverlap(_))
        ));
    }
}
