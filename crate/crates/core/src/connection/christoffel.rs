use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::metric::MetricSource;
use super::Differentiation;
use crate::atlas::{Atlas, ChartId, ChristoffelEntrySpec};
use crate::error::{GeometryError, Result};
use crate::expr::Expr;
use crate::tensor::{central_gradient, symmetric_spectrum, Christoffel};

/// `∂_k g` for each coordinate `k`.
type MetricGradient = Vec<DMatrix<f64>>;

/// Condition numbers above this are treated as a singular metric.
pub const MAX_CONDITION: f64 = 1e12;

/// A per-chart evaluator of `Γ^k_ij`.
pub trait ConnectionSource: Send + Sync {
    fn dim(&self) -> usize;

    fn christoffel(&self, x: &[f64]) -> Result<Christoffel>;

    /// Analytic `∂_m Γ^k_ij`, one tensor per coordinate `m`.
    fn derivatives(&self, _x: &[f64]) -> Option<Result<Vec<Christoffel>>> {
        None
    }

    fn expressions(&self) -> Option<Vec<ChristoffelEntrySpec>> {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlatSource {
    pub dim: usize,
}

impl ConnectionSource for FlatSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn christoffel(&self, _x: &[f64]) -> Result<Christoffel> {
        Ok(Christoffel::zeros(self.dim))
    }

    fn derivatives(&self, _x: &[f64]) -> Option<Result<Vec<Christoffel>>> {
        Some(Ok(vec![Christoffel::zeros(self.dim); self.dim]))
    }
}

/// Levi-Civita coefficients `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, computed
/// with a linear solve against `g`.
#[derive(Clone)]
pub struct LeviCivitaSource {
    pub metric: Arc<dyn MetricSource>,
    pub diff: Differentiation,
}

impl LeviCivitaSource {
    fn checked_metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric.value(x);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("metric evaluation"));
        }
        let (cond, min) = symmetric_spectrum(&g);
        if min <= 0.0 {
            return Err(GeometryError::NotPositiveDefinite(min));
        }
        if cond > MAX_CONDITION {
            return Err(GeometryError::SingularMetric(cond));
        }
        Ok(g)
    }

    fn first(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        match self.diff {
            Differentiation::Analytic => self
                .metric
                .first_derivatives(x)
                .ok_or(GeometryError::NoAnalyticDerivative),
            Differentiation::FiniteDifference { step } => {
                let n = self.metric.dim();
                Ok(
                    central_gradient(|y| Ok(self.metric.value(y).as_slice().to_vec()), x, step)?
                        .into_iter()
                        .map(|v| DMatrix::from_vec(n, n, v))
                        .collect(),
                )
            }
        }
    }

    /// Solves `g X = B` where `B[l, i·n+j] = Γ_lij` (first kind); returns `X` with
    /// `X[k, i·n+j] = Γ^k_ij`.
    fn solve_second_kind(g: &DMatrix<f64>, first_kind: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| GeometryError::NotPositiveDefinite(symmetric_spectrum(g).1))?;
        Ok(chol.solve(&first_kind))
    }

    /// The metric, its partial derivatives and the Christoffel array at `x`.
    fn compute(&self, x: &[f64]) -> Result<(DMatrix<f64>, MetricGradient, DMatrix<f64>)> {
        let n = self.metric.dim();
        let g = self.checked_metric(x)?;
        let d = self.first(x)?;
        let b = DMatrix::from_fn(n, n * n, |l, ij| {
            let (i, j) = (ij / n, ij % n);
            0.5 * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)])
        });
        let gamma = Self::solve_second_kind(&g, b)?;
        Ok((g, d, gamma))
    }
}

fn tensor_from_columns(n: usize, m: &DMatrix<f64>) -> Christoffel {
    let mut out = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out.set(k, i, j, m[(k, i * n + j)]);
            }
        }
    }
    out
}

impl ConnectionSource for LeviCivitaSource {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        let n = self.dim();
        let (_, _, gamma) = self.compute(x)?;
        let out = tensor_from_columns(n, &gamma);
        if !out.is_finite() {
            return Err(GeometryError::NonFinite("Levi-Civita coefficients"));
        }
        Ok(out)
    }

    fn derivatives(&self, x: &[f64]) -> Option<Result<Vec<Christoffel>>> {
        if self.diff != Differentiation::Analytic {
            return None;
        }
        let second = self.metric.second_derivatives(x)?;
        let n = self.dim();
        let run = || -> Result<Vec<Christoffel>> {
            let (g, d, gamma) = self.compute(x)?;
            let mut out = Vec::with_capacity(n);
            for m in 0..n {
                // ∂_m Γ^k_ij = g^{kl} (∂_m Γ_lij − ∂_m g_lp Γ^p_ij)
                let rhs = DMatrix::from_fn(n, n * n, |l, ij| {
                    let (i, j) = (ij / n, ij % n);
                    let dm_first = 0.5
                        * (second[m * n + i][(j, l)] + second[m * n + j][(i, l)]
                            - second[m * n + l][(i, j)]);
                    let correction: f64 = (0..n).map(|p| d[m][(l, p)] * gamma[(p, ij)]).sum();
                    dm_first - correction
                });
                let sol = Self::solve_second_kind(&g, rhs)?;
                out.push(tensor_from_columns(n, &sol));
            }
            Ok(out)
        };
        Some(run())
    }
}

/// `(1−t)·∇ + t·D`.
#[derive(Clone)]
pub struct ConvexSource {
    pub nabla: Arc<dyn ConnectionSource>,
    pub d: Arc<dyn ConnectionSource>,
    pub t: f64,
}

impl ConnectionSource for ConvexSource {
    fn dim(&self) -> usize {
        self.d.dim()
    }

    fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        let a = self.nabla.christoffel(x)?;
        let b = self.d.christoffel(x)?;
        Ok(a.combine(1.0 - self.t, &b, self.t))
    }

    fn derivatives(&self, x: &[f64]) -> Option<Result<Vec<Christoffel>>> {
        let a = self.nabla.derivatives(x)?;
        let b = self.d.derivatives(x)?;
        Some(a.and_then(|a| {
            b.map(|b| {
                a.iter()
                    .zip(&b)
                    .map(|(p, q)| p.combine(1.0 - self.t, q, self.t))
                    .collect()
            })
        }))
    }
}

/// Christoffel coefficients given as expressions; unlisted entries are zero.
#[derive(Clone, Debug)]
pub struct ExprConnection {
    dim: usize,
    entries: Vec<(usize, usize, usize, Expr)>,
}

impl ExprConnection {
    pub fn parse(entries: &[ChristoffelEntrySpec], coordinates: &[String]) -> Result<Self> {
        let n = coordinates.len();
        let mut parsed = Vec::with_capacity(entries.len());
        for e in entries {
            if e.k >= n || e.i >= n || e.j >= n {
                return Err(GeometryError::Manifest(format!(
                    "christoffel index ({}, {}, {}) out of range",
                    e.k, e.i, e.j
                )));
            }
            parsed.push((e.k, e.i, e.j, Expr::parse(&e.expr, coordinates)?));
        }
        Ok(Self {
            dim: n,
            entries: parsed,
        })
    }
}

impl ConnectionSource for ExprConnection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        let mut out = Christoffel::zeros(self.dim);
        for (k, i, j, e) in &self.entries {
            out.set(*k, *i, *j, e.eval(x));
        }
        if !out.is_finite() {
            return Err(GeometryError::NonFinite("christoffel expression"));
        }
        Ok(out)
    }

    fn expressions(&self) -> Option<Vec<ChristoffelEntrySpec>> {
        Some(
            self.entries
                .iter()
                .map(|(k, i, j, e)| ChristoffelEntrySpec {
                    k: *k,
                    i: *i,
                    j: *j,
                    expr: e.source().to_string(),
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionProvenance {
    FlatAffine,
    LeviCivita { metric: String },
    ConvexCombination { t: f64, nabla: String, d: String },
    Custom,
}

/// A linear connection given by its Christoffel coefficients chart by chart.
#[derive(Clone)]
pub struct ChristoffelField {
    id: String,
    atlas: Arc<Atlas>,
    sources: Vec<Arc<dyn ConnectionSource>>,
    symmetric: bool,
    provenance: ConnectionProvenance,
}

impl fmt::Debug for ChristoffelField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChristoffelField")
            .field("id", &self.id)
            .field("symmetric", &self.symmetric)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ChristoffelField {
    pub fn new(
        id: impl Into<String>,
        atlas: Arc<Atlas>,
        sources: Vec<Arc<dyn ConnectionSource>>,
        symmetric: bool,
        provenance: ConnectionProvenance,
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
            symmetric,
            provenance,
        })
    }

    /// `Γ ≡ 0` in every chart, with no check that the charts are affine.
    pub(crate) fn zero(atlas: Arc<Atlas>) -> Self {
        let n = atlas.dim();
        let source: Arc<dyn ConnectionSource> = Arc::new(FlatSource { dim: n });
        let sources = vec![source; atlas.charts().len()];
        Self {
            id: "flat".into(),
            atlas,
            sources,
            symmetric: true,
            provenance: ConnectionProvenance::FlatAffine,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        &self.atlas
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn provenance(&self) -> &ConnectionProvenance {
        &self.provenance
    }

    pub fn source(&self, chart: ChartId) -> &Arc<dyn ConnectionSource> {
        &self.sources[chart.0]
    }

    pub fn sources(&self) -> &[Arc<dyn ConnectionSource>] {
        &self.sources
    }

    pub fn gamma(&self, chart: ChartId, x: &[f64]) -> Result<Christoffel> {
        self.sources[chart.0].christoffel(x)
    }

    /// `∂_m Γ^k_ij` for every `m`.
    pub fn gamma_derivatives(
        &self,
        chart: ChartId,
        x: &[f64],
        diff: Differentiation,
    ) -> Result<Vec<Christoffel>> {
        let src = &self.sources[chart.0];
        match diff {
            Differentiation::Analytic => src
                .derivatives(x)
                .unwrap_or(Err(GeometryError::NoAnalyticDerivative)),
            Differentiation::FiniteDifference { step } => {
                let n = src.dim();
                Ok(
                    central_gradient(|y| Ok(src.christoffel(y)?.as_slice().to_vec()), x, step)?
                        .into_iter()
                        .map(|v| Christoffel::from_vec(n, v))
                        .collect(),
                )
            }
        }
    }

    /// Analytic derivatives when every chart provides them, otherwise central
    /// differences with the default step.
    pub fn preferred_differentiation(&self) -> Differentiation {
        let probe = self.atlas.sample_points(self.sources.len(), 0);
        let analytic = probe
            .iter()
            .all(|(c, x)| matches!(self.sources[c.0].derivatives(x), Some(Ok(_))));
        if analytic {
            Differentiation::Analytic
        } else {
            Differentiation::default()
        }
    }
}
