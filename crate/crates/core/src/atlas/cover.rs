use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::chart::ChartId;
use super::Atlas;
use crate::error::{GeometryError, Result};

pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How the integration grid of a piece is laid over its chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PieceMap {
    /// Grid directly over the chart's coordinate box.
    Identity,
    /// Grid over `(log r, hyperspherical angles)` covering the shell `inner ≤ |x| < outer`.
    LogSpherical { inner: f64, outer: f64 },
}

#[derive(Clone)]
pub struct CoverPiece {
    pub chart: ChartId,
    pub weight: WeightFn,
    pub grid: Vec<usize>,
    pub map: PieceMap,
    pub orientation: i8,
}

impl fmt::Debug for CoverPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoverPiece")
            .field("chart", &self.chart)
            .field("grid", &self.grid)
            .field("map", &self.map)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl CoverPiece {
    pub fn unit(chart: ChartId, grid: Vec<usize>) -> Self {
        Self {
            chart,
            weight: Arc::new(|_| 1.0),
            grid,
            map: PieceMap::Identity,
            orientation: 1,
        }
    }

    fn parameter_box(&self, atlas: &Atlas) -> Vec<(f64, f64)> {
        match self.map {
            PieceMap::Identity => atlas
                .chart(self.chart)
                .domain
                .intervals
                .iter()
                .map(|iv| (iv.lo, iv.hi))
                .collect(),
            PieceMap::LogSpherical { inner, outer } => {
                let m = atlas.dim();
                let mut b = vec![(inner.ln(), outer.ln())];
                for k in 1..m {
                    b.push(if k + 1 == m { (0.0, TAU) } else { (0.0, PI) });
                }
                b
            }
        }
    }

    /// Chart point and `|det ∂x/∂p|` for a parameter point.
    fn chart_point(&self, p: &[f64]) -> (Vec<f64>, f64) {
        match self.map {
            PieceMap::Identity => (p.to_vec(), 1.0),
            PieceMap::LogSpherical { .. } => {
                let m = p.len();
                let r = p[0].exp();
                let mut x = vec![0.0; m];
                let mut sin_prod = 1.0;
                let mut det = r.powi(m as i32);
                for k in 1..m {
                    x[k - 1] = r * sin_prod * p[k].cos();
                    if k + 1 < m {
                        det *= p[k].sin().abs().powi((m - 1 - k) as i32);
                    }
                    sin_prod *= p[k].sin();
                }
                x[m - 1] = r * sin_prod;
                (x, det)
            }
        }
    }
}

/// A partition of unity subordinate to the charts, with one integration grid per piece.
#[derive(Clone, Debug)]
pub struct QuadratureCover {
    pub pieces: Vec<CoverPiece>,
}

impl QuadratureCover {
    pub fn new(pieces: Vec<CoverPiece>) -> Self {
        Self { pieces }
    }

    /// Same cover with every piece using `grid`.
    pub fn with_grid(&self, grid: &[usize]) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| CoverPiece {
                    grid: grid.to_vec(),
                    ..p.clone()
                })
                .collect(),
        }
    }

    /// Midpoint-rule integral of a top-degree density: the sum over pieces of
    /// `orientation · weight · f · |det J| · cell volume`. Rows of the grid are summed in
    /// parallel and combined in a fixed pairwise order, so the result does not depend on
    /// the worker count.
    pub fn integrate<F>(&self, atlas: &Atlas, f: F) -> Result<f64>
    where
        F: Fn(ChartId, &[f64]) -> Result<f64> + Sync,
    {
        let mut totals = Vec::with_capacity(self.pieces.len());
        for piece in &self.pieces {
            let bounds = piece.parameter_box(atlas);
            if piece.grid.len() != bounds.len() || piece.grid.contains(&0) {
                return Err(GeometryError::InvalidParameter(format!(
                    "grid {:?} does not match a {}-dimensional piece",
                    piece.grid,
                    bounds.len()
                )));
            }
            let widths: Vec<f64> = bounds
                .iter()
                .zip(&piece.grid)
                .map(|((lo, hi), g)| (hi - lo) / *g as f64)
                .collect();
            let cell: f64 = widths.iter().product();
            let rows: Vec<f64> = (0..piece.grid[0])
                .into_par_iter()
                .map(|row| {
                    let mut values = Vec::new();
                    let mut idx = vec![0usize; bounds.len()];
                    idx[0] = row;
                    let mut p = vec![0.0; bounds.len()];
                    loop {
                        for (a, ((lo, _), w)) in bounds.iter().zip(&widths).enumerate() {
                            p[a] = lo + (idx[a] as f64 + 0.5) * w;
                        }
                        let (x, det) = piece.chart_point(&p);
                        let wgt = (piece.weight)(&x);
                        if wgt != 0.0 {
                            values.push(wgt * f(piece.chart, &x)? * det);
                        }
                        // odometer over the trailing axes
                        let mut axis = bounds.len();
                        loop {
                            if axis == 1 {
                                return Ok(pairwise_sum(&values));
                            }
                            axis -= 1;
                            idx[axis] += 1;
                            if idx[axis] < piece.grid[axis] {
                                break;
                            }
                            idx[axis] = 0;
                        }
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            totals.push(pairwise_sum(&rows) * cell * f64::from(piece.orientation));
        }
        let total = pairwise_sum(&totals);
        if !total.is_finite() {
            return Err(GeometryError::NonFinite("quadrature"));
        }
        Ok(total)
    }

    /// Worst `|Σ weights − 1|` over sampled points, and the smallest weight seen.
    pub fn partition_defect(&self, atlas: &Atlas, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        let mut min_weight = f64::INFINITY;
        for piece in &self.pieces {
            let domain = &atlas.chart(piece.chart).domain;
            for _ in 0..samples {
                let x = domain.sample(&mut rng, 0.0);
                let mut total = 0.0;
                for other in &self.pieces {
                    let w = if other.chart == piece.chart {
                        (other.weight)(&x)
                    } else {
                        match atlas.transitions().iter().find(|t| {
                            t.from == piece.chart && t.to == other.chart && t.overlap_test(&x)
                        }) {
                            Some(t) => (other.weight)(&t.forward(&x)),
                            None => 0.0,
                        }
                    };
                    min_weight = min_weight.min(w);
                    total += w;
                }
                worst = worst.max((total - 1.0).abs());
            }
        }
        (worst, min_weight)
    }
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
