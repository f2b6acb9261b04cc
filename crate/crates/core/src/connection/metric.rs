use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::scalar::ScalarField;
use super::Differentiation;
use crate::atlas::{Atlas, ChartId};
use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::tensor::{central_gradient, symmetric_spectrum};

/// A per-chart evaluator of the metric coefficients `g_ij`.
pub trait MetricSource: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> DMatrix<f64>;

    /// `∂_m g_ij`, one matrix per coordinate `m`.
    fn first_derivatives(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// `∂_m ∂_p g_ij` stored at index `m·n + p`.
    fn second_derivatives(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Expression strings of the entries, when the source came from a manifest.
    fn expressions(&self) -> Option<Vec<Vec<String>>> {
        None
    }
}

/// A constant coefficient matrix.
#[derive(Clone, Debug)]
pub struct ConstantMetric(pub DMatrix<f64>);

impl MetricSource for ConstantMetric {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn value(&self, _x: &[f64]) -> DMatrix<f64> {
        self.0.clone()
    }

    fn first_derivatives(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dim();
        Some(vec![DMatrix::zeros(n, n); n])
    }

    fn second_derivatives(&self, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dim();
        Some(vec![DMatrix::zeros(n, n); n * n])
    }
}

/// The round metric `R²(dθ² + sin²θ dφ²)` in spherical coordinates.
#[derive(Clone, Copy, Debug)]
pub struct RoundSphereMetric {
    pub radius: f64,
}

impl MetricSource for RoundSphereMetric {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let r2 = self.radius * self.radius;
        let s = x[0].sin();
        DMatrix::from_row_slice(2, 2, &[r2, 0.0, 0.0, r2 * s * s])
    }

    fn first_derivatives(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let r2 = self.radius * self.radius;
        let d_theta = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, r2 * (2.0 * x[0]).sin()]);
        Some(vec![d_theta, DMatrix::zeros(2, 2)])
    }

    fn second_derivatives(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let r2 = self.radius * self.radius;
        let tt = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * r2 * (2.0 * x[0]).cos()]);
        Some(vec![
            tt,
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
        ])
    }
}

/// `c(x) · g₀(x)` for a positive scalar `c`.
#[derive(Clone)]
pub struct ConformalMetric {
    pub factor: Arc<dyn ScalarField>,
    pub base: Arc<dyn MetricSource>,
}

impl MetricSource for ConformalMetric {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> DMatrix<f64> {
        self.base.value(x) * self.factor.value(x)
    }

    fn first_derivatives(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let g0 = self.base.value(x);
        let d0 = self.base.first_derivatives(x)?;
        let c = self.factor.value(x);
        let dc = self.factor.gradient(x);
        Some(
            d0.iter()
                .enumerate()
                .map(|(m, dg)| &g0 * dc[m] + dg * c)
                .collect(),
        )
    }

    fn second_derivatives(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dim();
        let g0 = self.base.value(x);
        let d0 = self.base.first_derivatives(x)?;
        let dd0 = self.base.second_derivatives(x)?;
        let c = self.factor.value(x);
        let dc = self.factor.gradient(x);
        let hc = self.factor.hessian(x);
        let mut out = Vec::with_capacity(n * n);
        for m in 0..n {
            for p in 0..n {
                out.push(&g0 * hc[(m, p)] + &d0[p] * dc[m] + &d0[m] * dc[p] + &dd0[m * n + p] * c);
            }
        }
        Some(out)
    }
}

/// `t·g + (1−t)·h`.
#[derive(Clone)]
pub struct InterpolatedMetric {
    pub t: f64,
    pub g: Arc<dyn MetricSource>,
    pub h: Arc<dyn MetricSource>,
}

impl MetricSource for InterpolatedMetric {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn value(&self, x: &[f64]) -> DMatrix<f64> {
        self.g.value(x) * self.t + self.h.value(x) * (1.0 - self.t)
    }

    fn first_derivatives(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let a = self.g.first_derivatives(x)?;
        let b = self.h.first_derivatives(x)?;
        Some(
            a.iter()
                .zip(&b)
                .map(|(p, q)| p * self.t + q * (1.0 - self.t))
                .collect(),
        )
    }

    fn second_derivatives(&self, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let a = self.g.second_derivatives(x)?;
        let b = self.h.second_derivatives(x)?;
        Some(
            a.iter()
                .zip(&b)
                .map(|(p, q)| p * self.t + q * (1.0 - self.t))
                .collect(),
        )
    }
}

/// Metric entries given as expressions in the chart coordinates.
#[derive(Clone, Debug)]
pub struct ExprMetric {
    entries: Vec<Vec<Expr>>,
}

impl ExprMetric {
    pub fn parse(entries: &[Vec<String>], coordinates: &[String]) -> Result<Self> {
        let n = coordinates.len();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Manifest(format!(
                "metric must be a {n}x{n} array of expressions"
            )));
        }
        let parsed = entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| Expr::parse(s, coordinates))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, row) in parsed.iter().enumerate() {
            for j in 0..i {
                if row[j] != parsed[j][i] {
                    return Err(GeometryError::Manifest(format!(
                        "metric entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self { entries: parsed })
    }
}

impl MetricSource for ExprMetric {
    fn dim(&self) -> usize {
        self.entries.len()
    }

    fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j].eval(x))
    }

    fn expressions(&self) -> Option<Vec<Vec<String>>> {
        Some(
            self.entries
                .iter()
                .map(|r| r.iter().map(|e| e.source().to_string()).collect())
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricProvenance {
    Analytic,
    Manifest,
    Interpolated { t: f64, g: String, h: String },
}

/// A Riemannian metric given chart by chart.
#[derive(Clone)]
pub struct MetricField {
    id: String,
    atlas: Arc<Atlas>,
    sources: Vec<Arc<dyn MetricSource>>,
    provenance: MetricProvenance,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("id", &self.id)
            .field("provenance", &self.provenance)
            .finish()
    }
}

/// Value and coordinate derivatives of a metric at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub value: DMatrix<f64>,
    pub first: Vec<DMatrix<f64>>,
    pub second: Option<Vec<DMatrix<f64>>>,
}

impl MetricField {
    pub fn new(
        id: impl Into<String>,
        atlas: Arc<Atlas>,
        sources: Vec<Arc<dyn MetricSource>>,
        provenance: MetricProvenance,
    ) -> Result<Self> {
        if sources.len() != atlas.charts().len() {
            return Err(GeometryError::MismatchedAtlas);
        }
        for s in &sources {
            if s.dim() != atlas.dim() {
                return Err(GeometryError::DimensionMismatch {
                    expected: atlas.dim(),
                    got: s.dim(),
                });
            }
        }
        Ok(Self {
            id: id.into(),
            atlas,
            sources,
            provenance,
        })
    }

    /// The same evaluator on every chart.
    pub fn uniform(
        id: impl Into<String>,
        atlas: Arc<Atlas>,
        source: Arc<dyn MetricSource>,
    ) -> Result<Self> {
        let sources = vec![source; atlas.charts().len()];
        Self::new(id, atlas, sources, MetricProvenance::Analytic)
    }

    /// `δ_ij` in every chart.
    pub fn euclidean(atlas: Arc<Atlas>) -> Self {
        let n = atlas.dim();
        Self::uniform(
            "euclidean",
            atlas,
            Arc::new(ConstantMetric(DMatrix::identity(n, n))),
        )
        .expect("dimensions agree by construction")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        &self.atlas
    }

    pub fn provenance(&self) -> &MetricProvenance {
        &self.provenance
    }

    pub fn source(&self, chart: ChartId) -> &Arc<dyn MetricSource> {
        &self.sources[chart.0]
    }

    pub fn sources(&self) -> &[Arc<dyn MetricSource>] {
        &self.sources
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim()
    }

    pub fn value(&self, chart: ChartId, x: &[f64]) -> DMatrix<f64> {
        self.sources[chart.0].value(x)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        let probe = self
            .atlas
            .sample_points(self.sources.len(), 0)
            .into_iter()
            .collect::<Vec<_>>();
        probe.iter().all(|(c, x)| {
            let s = &self.sources[c.0];
            s.first_derivatives(x).is_some() && s.second_derivatives(x).is_some()
        })
    }

    /// Metric value and derivatives up to `order` (1 or 2).
    pub fn jet(
        &self,
        chart: ChartId,
        x: &[f64],
        diff: Differentiation,
        order: usize,
    ) -> Result<MetricJet> {
        let src = &self.sources[chart.0];
        let n = src.dim();
        let value = src.value(x);
        match diff {
            Differentiation::Analytic => {
                let first = src
                    .first_derivatives(x)
                    .ok_or(GeometryError::NoAnalyticDerivative)?;
                let second = if order >= 2 {
                    Some(
                        src.second_derivatives(x)
                            .ok_or(GeometryError::NoAnalyticDerivative)?,
                    )
                } else {
                    None
                };
                Ok(MetricJet {
                    value,
                    first,
                    second,
                })
            }
            Differentiation::FiniteDifference { step } => {
                let flat = |y: &[f64]| Ok(src.value(y).as_slice().to_vec());
                let first: Vec<DMatrix<f64>> = central_gradient(flat, x, step)?
                    .into_iter()
                    .map(|v| DMatrix::from_vec(n, n, v))
                    .collect();
                let second = if order >= 2 {
                    let d1 = |y: &[f64]| {
                        let g = central_gradient(
                            |z: &[f64]| Ok(src.value(z).as_slice().to_vec()),
                            y,
                            step,
                        )?;
                        Ok(g.into_iter().flatten().collect::<Vec<f64>>())
                    };
                    // entry [p][m·n² + ...] = ∂_p ∂_m g
                    let grads = central_gradient(d1, x, step)?;
                    let mut out = vec![DMatrix::zeros(n, n); n * n];
                    for (p, gp) in grads.iter().enumerate() {
                        for m in 0..n {
                            out[m * n + p] =
                                DMatrix::from_column_slice(n, n, &gp[m * n * n..(m + 1) * n * n]);
                        }
                    }
                    Some(out)
                } else {
                    None
                };
                Ok(MetricJet {
                    value,
                    first,
                    second,
                })
            }
        }
    }

    /// Smallest eigenvalue of `g` over seeded interior samples.
    pub fn min_eigenvalue(&self, samples: usize, seed: u64) -> f64 {
        self.atlas
            .sample_points(samples, seed)
            .iter()
            .map(|(c, x)| symmetric_spectrum(&self.value(*c, x)).1)
            .fold(f64::INFINITY, f64::min)
    }
}
