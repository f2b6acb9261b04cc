//! Christoffel fields: flat affine connections, Levi-Civita connections of metrics,
//! convex combinations of connections and interpolation of metrics.

mod christoffel;
mod metric;
mod riemann;
mod scalar;

pub use christoffel::{
    ChristoffelField, ConnectionProvenance, ConnectionSource, ConvexSource, ExprConnection,
    FlatSource, LeviCivitaSource, MAX_CONDITION,
};
pub use metric::{
    ConformalMetric, ConstantMetric, ExprMetric, InterpolatedMetric, MetricField, MetricJet,
    MetricProvenance, MetricSource, RoundSphereMetric,
};
pub use riemann::{riemann, RiemannTensor};
pub use scalar::{RadialProfile, ScalarField, SineProductBump, SphereBump};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atlas::{ChartId, ChartedManifold, TransitionRule};
use crate::error::{GeometryError, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// How coordinate derivatives of fields are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differentiation {
    Analytic,
    FiniteDifference { step: f64 },
}

impl Default for Differentiation {
    fn default() -> Self {
        Differentiation::FiniteDifference {
            step: DEFAULT_FD_STEP,
        }
    }
}

impl Differentiation {
    /// Analytic when the metric ships derivatives, central differences otherwise.
    pub fn preferred_for(metric: &MetricField) -> Self {
        if metric.has_analytic_derivatives() {
            Differentiation::Analytic
        } else {
            Differentiation::default()
        }
    }
}

/// The connection that declares the coordinate frame of every affine chart parallel.
pub fn flat_connection(manifold: &ChartedManifold) -> Result<ChristoffelField> {
    let atlas = manifold.atlas();
    if let Some(chart) = atlas.charts().iter().find(|c| !c.is_affine()) {
        return Err(GeometryError::NonAffineChart(chart.name.clone()));
    }
    if let Some(t) = atlas
        .transitions()
        .iter()
        .find(|t| !matches!(t.rule, TransitionRule::Affine(_)))
    {
        return Err(GeometryError::NonAffineChart(t.name.clone()));
    }
    Ok(ChristoffelField::zero(atlas.clone()))
}

/// The Levi-Civita connection of `metric`.
pub fn levi_civita(metric: &MetricField, diff: Differentiation) -> Result<ChristoffelField> {
    if diff == Differentiation::Analytic && !metric.has_analytic_derivatives() {
        return Err(GeometryError::NoAnalyticDerivative);
    }
    let sources: Vec<Arc<dyn ConnectionSource>> = metric
        .sources()
        .iter()
        .map(|s| {
            Arc::new(LeviCivitaSource {
                metric: s.clone(),
                diff,
            }) as Arc<dyn ConnectionSource>
        })
        .collect();
    ChristoffelField::new(
        format!("levi_civita({})", metric.id()),
        metric.atlas().clone(),
        sources,
        true,
        ConnectionProvenance::LeviCivita {
            metric: metric.id().to_string(),
        },
    )
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(GeometryError::ParameterOutOfRange(t))
    }
}

/// `D(t) = (1−t)∇ + tD`, evaluated pointwise.
pub fn convex_combine(
    nabla: &ChristoffelField,
    d: &ChristoffelField,
    t: f64,
) -> Result<ChristoffelField> {
    if !Arc::ptr_eq(nabla.atlas(), d.atlas()) {
        return Err(GeometryError::MismatchedAtlas);
    }
    check_t(t)?;
    if !(nabla.is_symmetric() && d.is_symmetric()) {
        return Err(GeometryError::InvalidParameter(
            "convex combination needs symmetric connections".into(),
        ));
    }
    let sources: Vec<Arc<dyn ConnectionSource>> = nabla
        .sources()
        .iter()
        .zip(d.sources())
        .map(|(a, b)| {
            Arc::new(ConvexSource {
                nabla: a.clone(),
                d: b.clone(),
                t,
            }) as Arc<dyn ConnectionSource>
        })
        .collect();
    ChristoffelField::new(
        format!("({}){}+({}){}", 1.0 - t, nabla.id(), t, d.id()),
        nabla.atlas().clone(),
        sources,
        true,
        ConnectionProvenance::ConvexCombination {
            t,
            nabla: nabla.id().to_string(),
            d: d.id().to_string(),
        },
    )
}

/// `g(t) = t·g + (1−t)·h`.
pub fn metric_interpolate(g: &MetricField, h: &MetricField, t: f64) -> Result<MetricField> {
    if !Arc::ptr_eq(g.atlas(), h.atlas()) {
        return Err(GeometryError::MismatchedAtlas);
    }
    check_t(t)?;
    let sources: Vec<Arc<dyn MetricSource>> = g
        .sources()
        .iter()
        .zip(h.sources())
        .map(|(a, b)| {
            Arc::new(InterpolatedMetric {
                t,
                g: a.clone(),
                h: b.clone(),
            }) as Arc<dyn MetricSource>
        })
        .collect();
    MetricField::new(
        format!("{}*{}+{}*{}", t, g.id(), 1.0 - t, h.id()),
        g.atlas().clone(),
        sources,
        MetricProvenance::Interpolated {
            t,
            g: g.id().to_string(),
            h: h.id().to_string(),
        },
    )
}

/// Result of a metric-compatibility scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    /// `max |∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il|` over the samples.
    pub max_defect: f64,
    pub worst_chart: usize,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub differentiation: Differentiation,
}

/// `|∇g|` at one point.
pub fn compatibility_defect(
    conn: &ChristoffelField,
    metric: &MetricField,
    chart: ChartId,
    x: &[f64],
    diff: Differentiation,
) -> Result<f64> {
    let n = conn.dim();
    let gamma = conn.gamma(chart, x)?;
    let jet = metric.jet(chart, x, diff, 1)?;
    let g = &jet.value;
    let mut worst = 0.0_f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = jet.first[k][(i, j)];
                for l in 0..n {
                    v -= gamma.get(l, k, i) * g[(l, j)] + gamma.get(l, k, j) * g[(i, l)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Scans `|∇g|` over seeded interior sample points.
pub fn check_locally_metric(
    conn: &ChristoffelField,
    metric: &MetricField,
    samples: usize,
    seed: u64,
) -> Result<CompatibilityReport> {
    if !Arc::ptr_eq(conn.atlas(), metric.atlas()) {
        return Err(GeometryError::MismatchedAtlas);
    }
    let diff = Differentiation::preferred_for(metric);
    let mut report = CompatibilityReport {
        max_defect: 0.0,
        worst_chart: 0,
        worst_point: Vec::new(),
        samples,
        differentiation: diff,
    };
    for (chart, x) in conn.atlas().sample_points(samples, seed) {
        let d = compatibility_defect(conn, metric, chart, &x, diff)?;
        if d >= report.max_defect {
            report.max_defect = d;
            report.worst_chart = chart.0;
            report.worst_point = x;
        }
    }
    Ok(report)
}
