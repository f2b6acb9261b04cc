use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChartId(pub usize);

/// One coordinate axis of a chart domain. Periodic axes are half-open `[lo, hi)`,
/// the others open `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.periodic {
            self.lo <= x && x < self.hi
        } else {
            self.lo < x && x < self.hi
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateKind {
    Affine,
    General,
}

/// An axis-aligned box, optionally cut down to a spherical shell `inner ≤ |x| < outer`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub intervals: Vec<Interval>,
    pub shell: Option<(f64, f64)>,
}

impl Domain {
    pub fn boxed(intervals: Vec<Interval>) -> Self {
        Self {
            intervals,
            shell: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        if !self.intervals.iter().zip(x).all(|(iv, v)| iv.contains(*v)) {
            return false;
        }
        match self.shell {
            Some((inner, outer)) => {
                let r = norm(x);
                inner <= r && r < outer
            }
            None => true,
        }
    }

    /// Distance to the nearest non-periodic boundary face (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for (iv, v) in self.intervals.iter().zip(x) {
            if !iv.periodic {
                d = d.min(v - iv.lo).min(iv.hi - v);
            }
        }
        if let Some((inner, outer)) = self.shell {
            let r = norm(x);
            d = d.min(r - inner).min(outer - r);
        }
        d
    }

    /// Uniform sample away from non-periodic faces; shells are sampled log-uniformly in radius.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, margin: f64) -> Vec<f64> {
        if let Some((inner, outer)) = self.shell {
            let n = self.dim();
            loop {
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let len = norm(&dir);
                if !(1e-3..=1.0).contains(&len) {
                    continue;
                }
                let (lo, hi) = (inner.ln(), outer.ln());
                let span = hi - lo;
                let r = rng.gen_range(lo + margin * span..hi - margin * span).exp();
                let x: Vec<f64> = dir.iter().map(|d| d / len * r).collect();
                if self.contains(&x) {
                    return x;
                }
            }
        }
        self.intervals
            .iter()
            .map(|iv| {
                if iv.periodic {
                    rng.gen_range(iv.lo..iv.hi)
                } else {
                    let m = margin * iv.width();
                    rng.gen_range(iv.lo + m..iv.hi - m)
                }
            })
            .collect()
    }
}

/// A coordinate chart `ψ: U → ℝⁿ`, represented by its image domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: ChartId,
    pub name: String,
    pub domain: Domain,
    pub kind: CoordinateKind,
}

impl Chart {
    pub fn new(
        id: ChartId,
        name: impl Into<String>,
        domain: Domain,
        kind: CoordinateKind,
    ) -> Result<Self> {
        if domain.intervals.is_empty() {
            return Err(GeometryError::InvalidDimension(0));
        }
        for iv in &domain.intervals {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi) {
                return Err(GeometryError::InvalidParameter(format!(
                    "chart interval ({}, {}) must be finite and nonempty",
                    iv.lo, iv.hi
                )));
            }
        }
        if let Some((inner, outer)) = domain.shell {
            if !(inner > 0.0 && inner < outer && outer.is_finite()) {
                return Err(GeometryError::InvalidParameter(format!(
                    "shell radii ({inner}, {outer}) must satisfy 0 < inner < outer"
                )));
            }
        }
        Ok(Self {
            id,
            name: name.into(),
            domain,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn is_affine(&self) -> bool {
        self.kind == CoordinateKind::Affine
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
